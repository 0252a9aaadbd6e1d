import logging

from django.core.management.base import BaseCommand, CommandError

from jobs.parser import ConfigError
from jobs.runner import EXIT_OK, EXIT_USAGE, USAGE_ERRORS, load_job, output_directory, run, set_verbosity


LOGGER = logging.getLogger('main')


class Command(BaseCommand):
    help = "Runs a job file and writes its certificates and results."

    def add_arguments(self, parser):
        parser.add_argument('--job', required=True, help="path to a JSON or YAML job file")
        parser.add_argument('--out', default=None, help="output directory, overrides output_dir of the job")

    def handle(self, *args, **options):
        set_verbosity(options["verbosity"])
        try:
            job, base_dir = load_job(options["job"])
            out_dir = output_directory(job, base_dir, options["out"])
            outcome = run(job, out_dir, base_dir)
        except ConfigError as e:
            LOGGER.error("%s", e)
            raise CommandError(str(e), returncode=EXIT_USAGE)
        except USAGE_ERRORS as e:
            LOGGER.exception("Job %s cannot run", options["job"])
            raise CommandError(str(e), returncode=EXIT_USAGE)

        if outcome.exit_code != EXIT_OK:
            raise CommandError(outcome.message, returncode=outcome.exit_code)
        self.stdout.write("Job %s passed: %d certificates in %s" % (job.command, len(outcome.certificates), out_dir))
