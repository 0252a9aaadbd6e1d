'''
Writing, reloading and re-validating job artifacts.

Every file goes through util.files.write_atomic. JSON is written with
sorted keys and a fixed indent, grids in the binary format (with a CSV
copy for plotting), so two runs of the same job produce identical bytes.
'''
import json
import logging
import os
from pathlib import Path
from typing import Any, List

from pydantic import ValidationError

from crossed.groups import GroupKind, GroupWindow
from crossed.product import CrossedElement
from grids.formats import read_grid, to_binary, to_csv
from grids.grid import GridError, GridFunction
from scales.certificate import Certificate
from scales.scale import Scale, ScaleKind
from util.files import readfile, walk_files, write_atomic
from util.pydantic import PydanticModel, json_default


LOGGER = logging.getLogger('main')

CERTIFICATE_DIR = "certificates"
CROSSED_MANIFEST = "element.json"


class CrossedManifest(PydanticModel):
    kind: GroupKind
    radius: int
    spacing: float
    omega: str
    slices: List[str]
    notes: List[str] = []


class ArtifactWriter:
    '''
    Writes the artifacts of one job below <out_dir> and remembers their
    paths relative to it.
    '''

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.written: List[str] = []

    def _write(self, name: str, data) -> str:
        path = os.path.join(self.out_dir, name)
        write_atomic(path, data)
        self.written.append(name)
        LOGGER.debug("Wrote %s", path)
        return path

    def grid(self, name: str, f: GridFunction, csv: bool = True) -> str:
        path = self._write(f"{name}.bin", to_binary(f))
        if csv:
            self._write(f"{name}.csv", to_csv(f))
        return path

    def json(self, name: str, value: Any) -> str:
        if isinstance(value, PydanticModel):
            text = value.to_json()
        else:
            text = json.dumps(value, sort_keys=True, indent=2, default=json_default)
        return self._write(f"{name}.json", text + "\n")

    def certificate(self, name: str, certificate: Certificate) -> str:
        return self.json(os.path.join(CERTIFICATE_DIR, name), certificate)

    def text(self, name: str, text: str) -> str:
        return self._write(name, text)

    def crossed_element(self, name: str, F: CrossedElement) -> str:
        '''
        A directory with the manifest, the window scale and one binary
        grid per slice in window order.
        '''
        slices = []
        for i, s in enumerate(F.slices):
            slices.append(f"slice_{i:03d}.bin")
            self._write(os.path.join(name, slices[-1]), to_binary(s))
        self._write(os.path.join(name, "omega.bin"), to_binary(F.omega.f))
        manifest = CrossedManifest(
            kind=F.window.kind,
            radius=F.window.radius,
            spacing=F.window.spacing,
            omega="omega.bin",
            slices=slices,
            notes=list(F.notes),
        )
        return self.json(os.path.join(name, "element"), manifest)


def read_crossed_element(path: str) -> CrossedElement:
    '''
    @param path: a directory written by L{ArtifactWriter.crossed_element}
    '''
    manifest = CrossedManifest.parse_raw(readfile(os.path.join(path, CROSSED_MANIFEST)))
    window = GroupWindow(manifest.kind, manifest.radius, manifest.spacing)
    omega = Scale(read_grid(os.path.join(path, manifest.omega)), kind=ScaleKind.ON_GROUP)
    slices = [read_grid(os.path.join(path, name)) for name in manifest.slices]
    return CrossedElement(window, slices, omega, tuple(manifest.notes))


class VerificationReport(PydanticModel):
    certificates: int = 0
    grids: int = 0
    failures: List[str] = []

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_directory(path: str) -> VerificationReport:
    '''
    Reloads every certificate and binary grid below <path> and checks that
    each certificate still agrees with its own residual.
    '''
    report = VerificationReport()
    root = Path(path)
    for file in walk_files(root / CERTIFICATE_DIR, ".json"):
        name = str(file.relative_to(root))
        try:
            certificate = Certificate.parse_raw(readfile(file))
        except (OSError, ValidationError) as e:
            report.failures.append(f"{name}: {e}")
            continue
        report.certificates += 1
        if not certificate.revalidate():
            report.failures.append(f"{name}: pass does not match the worst residual")
    for file in walk_files(root, ".bin"):
        try:
            read_grid(file)
        except (OSError, ValueError, GridError) as e:
            report.failures.append(f"{file.relative_to(root)}: {e}")
            continue
        report.grids += 1
    LOGGER.info("Verified %d certificates and %d grids in %s", report.certificates, report.grids, path)
    return report
