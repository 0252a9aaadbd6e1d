import json
import logging
import os
from typing import Callable, Dict, Optional

import yaml


LOGGER = logging.getLogger('main')


class ConfigError(Exception):
    '''
    Job file errors.
    '''
    def __init__(self, value, error=None):
        self.value = value
        self.error = error

    def __str__(self):
        if self.error is not None:
            return "%s: %s" % (str(self.value), repr(self.error))
        return str(self.value)


class JobParser:
    '''
    Reads job files written in JSON or YAML.
    '''
    FORMATS: Dict[str, Callable] = {
        'json': json.load,
        'yaml': yaml.safe_load,
        'yml': yaml.safe_load,
    }


    @staticmethod
    def get_config(path: str) -> str:
        '''
        Returns the full path to the job file identified by a path.

        @type path: C{str}
        @param path: a path to a job file, possibly without a suffix
        @rtype: C{str}
        @return: the full path to the corresponding job file
        @raises ConfigError: if multiple rivalling files or none exist
        '''

        # Check for complete path.
        if os.path.isfile(path):
            ext = os.path.splitext(path)[1]
            if len(ext) > 0 and ext[1:] in JobParser.FORMATS:
                return path

        # Try supported format extensions.
        config_file = None
        if os.path.isdir(os.path.dirname(path) or "."):
            for ext in JobParser.FORMATS.keys():
                f = "%s.%s" % (path, ext)
                if os.path.isfile(f):
                    if config_file is not None:
                        raise ConfigError('Multiple job files for "%s"' % (path))
                    config_file = f
        if not config_file:
            raise ConfigError('No supported job file at "%s"' % (path))
        return config_file


    @staticmethod
    def parse(path: str, loader: Optional[Callable] = None) -> dict:
        '''
        Parses a dict from a file.

        @type path: C{str}
        @param path: a path to a file
        @type loader: C{function}
        @param loader: a stream parser
        @rtype: C{dict}
        @return: the parsed job description
        @raises ConfigError: unreadable file, syntax errors or a non-mapping
        '''
        path = JobParser.get_config(path)
        if not loader:
            loader = JobParser.FORMATS[os.path.splitext(path)[1][1:]]
        try:
            with open(path) as f:
                data = loader(f)
        except OSError as e:
            raise ConfigError("Cannot read %s" % (path), e)
        except (ValueError, yaml.YAMLError) as e:
            raise ConfigError("Syntax error in %s" % (path), e)
        if not isinstance(data, dict):
            raise ConfigError("Job file %s does not contain a mapping" % (path))
        LOGGER.debug("Parsed job file %s", path)
        return data
