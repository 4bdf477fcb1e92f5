import numpy as np


class Integrator:
    """
    Time evolution of a small, time-independent system. H in angular units, t in its inverse.
    """

    def __call__(self, hamiltonian: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
        """
        returns ψ(t) for every t in `times`, shaped (len(times), dim)
        """
        raise NotImplementedError

    def lindblad(
        self, hamiltonian: np.ndarray, collapse: list[np.ndarray], rho0: np.ndarray, t_final: float
    ) -> np.ndarray:
        """
        returns ρ(t_final) under dρ/dt = -i[H, ρ] + Σ_k L_k ρ L_k† - {L_k† L_k, ρ} / 2
        """
        raise NotImplementedError


def liouvillian(hamiltonian: np.ndarray, collapse: list[np.ndarray]) -> np.ndarray:
    """
    the Lindblad generator acting on row-major vec(ρ), vec(AρB) = (A ⊗ Bᵀ) vec(ρ).
    """
    dim = len(hamiltonian)
    eye = np.eye(dim)
    generator = -1j * (np.kron(hamiltonian, eye) - np.kron(eye, hamiltonian.T))
    for op in collapse:
        rate = op.conj().T @ op
        generator += np.kron(op, op.conj()) - 0.5 * (np.kron(rate, eye) + np.kron(eye, rate.T))
    return generator
