class LatticeSpecError(Exception):
    """
    An exception raised when a lattice spec cannot be built.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Invalid lattice spec:\n" + self.out


class TessellationError(Exception):
    """
    An exception raised when a pair set is not a matching, or a tessellation kind
    does not exist on the lattice.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Invalid tessellation:\n" + self.out


class SeamError(Exception):
    """
    An exception raised when a boundary seam is requested where it cannot exist.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Invalid seam:\n" + self.out


class ProgramError(Exception):
    """
    An exception raised when a step program cannot be resolved against a lattice.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Step program cannot be resolved:\n" + self.out


class DensityMatrixError(Exception):
    """
    An exception raised when a density matrix or a dephasing probability is invalid.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Invalid density matrix input:\n" + self.out


class FitFailure(Exception):
    """
    An exception raised when a fit has too few usable points.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Fit failed:\n" + self.out


class IntegrationError(Exception):
    """
    An exception raised when a Schrödinger or master-equation integration misses its tolerance.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Integration tolerance not met:\n" + self.out


class ResonantCollisionError(Exception):
    """
    An exception raised when an unwanted neighbour is degenerate with the targeted pair.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Neighbour in resonance with the laser:\n" + self.out


class UnreachableFidelityError(Exception):
    """
    An exception raised when no laser coupling reaches the requested fidelity.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Fidelity unreachable:\n" + self.out


class GapClosedError(Exception):
    """
    An exception raised when a quasi-energy gap closes where an invariant or a Bloch direction is requested.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Quasi-energy gap closed:\n" + self.out


class ConfigError(Exception):
    """
    An exception raised when an experiment config does not parse or validate.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Invalid config:\n" + self.out


class NumericalToleranceError(Exception):
    """
    An exception raised when a conserved quantity drifts beyond its tolerance.
    """

    def __init__(self, out: str):
        self.out = out

    def __str__(self) -> str:
        return "Numerical tolerance breached:\n" + self.out
