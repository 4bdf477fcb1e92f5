import numpy as np
from scipy.linalg import eigh, expm
from rydwalk.modeling_integrator import Integrator, liouvillian


class ExpmIntegrator(Integrator):

    def __call__(self, hamiltonian: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
        """
        Exact propagation through the eigenbasis of H; one diagonalization for all times.
        """
        energies, vectors = eigh(hamiltonian)
        coefficients = vectors.conj().T @ np.asarray(psi0, dtype=complex)
        phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), energies))
        return (phases * coefficients) @ vectors.T

    def lindblad(
        self, hamiltonian: np.ndarray, collapse: list[np.ndarray], rho0: np.ndarray, t_final: float
    ) -> np.ndarray:
        dim = len(hamiltonian)
        vec = expm(liouvillian(hamiltonian, collapse) * t_final) @ np.asarray(rho0, dtype=complex).ravel()
        return vec.reshape(dim, dim)
