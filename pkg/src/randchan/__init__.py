"""Random quantum channels from Haar isometries: exact moments, spectral
estimates, analytic bounds and MPS reduced states."""
__version__ = "0.1.0"


def build_id() -> str:
    import platform

    import numpy
    import scipy

    return (f"randchan {__version__} (python {platform.python_version()}, "
            f"numpy {numpy.__version__}, scipy {scipy.__version__})")
