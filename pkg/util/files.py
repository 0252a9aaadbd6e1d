'''
Utility functions for artifact files.

'''
import os
from pathlib import Path
import shutil
import tempfile
from typing import Iterator, Union

from util.typing import PathLike


def rm_path(path: Union[str, Path]) -> None:
    path = Path(path)
    if path.is_symlink():
        path.unlink()
    elif not path.exists():
        return
    elif path.is_dir():
        shutil.rmtree(path)
    else:
        path.unlink()


def _tmp_path(path: PathLike) -> str:
    """
    returns a path to a temporary file in the same directory as <path>
    with the name prefixed with <path>s name.
    """
    dir, name = os.path.split(os.fspath(path))
    fd, tmp = tempfile.mkstemp(prefix=name, dir=dir or None)
    os.close(fd)
    return tmp


def write_atomic(path: PathLike, data: Union[str, bytes]) -> None:
    '''
    Writes a file so that readers never see a partially written artifact.

    @type path: C{str}
    @param path: destination path, parent directories are created
    @type data: C{str} or C{bytes}
    @param data: the full file contents
    '''
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    tmp = _tmp_path(path)
    try:
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(tmp, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except:
        rm_path(tmp)
        raise


def readfile(path: PathLike) -> str:
    with open(path) as file:
        return file.read()


def readbytes(path: PathLike) -> bytes:
    with open(path, "rb") as file:
        return file.read()


def walk_files(root: PathLike, suffix: str) -> Iterator[Path]:
    '''
    Yields files under <root> with the given suffix in sorted order.
    '''
    yield from sorted(p for p in Path(root).rglob(f"*{suffix}") if p.is_file())
