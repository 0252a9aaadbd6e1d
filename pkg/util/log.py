import logging
from typing import TYPE_CHECKING


if TYPE_CHECKING:
    from scales.certificate import Certificate


certificate_logger = logging.getLogger("smoothfactor.certificates")

class CertificateLog:
    @staticmethod
    def _msg(certificate: "Certificate", msg: str) -> str:
        constants = " ".join(f"{k}={v:.6g}" for k, v in sorted(certificate.constants.items()))
        witness = ",".join(f"{c:.6g}" for c in certificate.witness)
        return f"CERTIFICATE {certificate.kind} pass={certificate.passed} residual={certificate.worst_residual:.3e} witness=({witness}) {constants} {msg}".rstrip()

    @staticmethod
    def record(certificate: "Certificate", msg: str = "") -> "Certificate":
        if certificate.passed:
            certificate_logger.info(CertificateLog._msg(certificate, msg))
        else:
            certificate_logger.warning(CertificateLog._msg(certificate, msg))
        return certificate
