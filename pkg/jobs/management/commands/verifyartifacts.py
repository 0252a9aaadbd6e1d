import os

from django.core.management.base import BaseCommand, CommandError

from jobs.artifacts import verify_directory
from jobs.runner import EXIT_CERTIFICATE, EXIT_USAGE


class Command(BaseCommand):
    help = "Reloads the certificates and grids of a job output directory and re-validates them."

    def add_arguments(self, parser):
        parser.add_argument('directory', type=str)

    def handle(self, *args, **options):
        if not os.path.isdir(options["directory"]):
            raise CommandError("No such directory: %s" % (options["directory"]), returncode=EXIT_USAGE)
        report = verify_directory(options["directory"])
        for failure in report.failures:
            self.stderr.write(failure)
        if not report.ok:
            raise CommandError("%d artifacts failed verification" % (len(report.failures)), returncode=EXIT_CERTIFICATE)
        self.stdout.write("Verified %d certificates and %d grids" % (report.certificates, report.grids))
