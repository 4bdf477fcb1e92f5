import numpy as np
from scipy.integrate import solve_ivp
from rydwalk.errors import IntegrationError
from rydwalk.modeling_integrator import Integrator, liouvillian


class OdeIntegrator(Integrator):

    def __init__(self, rtol: float = 1e-10, atol: float = 1e-12, method: str = "DOP853"):
        self.rtol = rtol
        self.atol = atol
        self.method = method

    def _solve(self, generator: np.ndarray, y0: np.ndarray, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        solution = solve_ivp(
            lambda t, y: generator @ y,
            (0.0, float(times[-1])),
            y0,
            t_eval=times,
            method=self.method,
            rtol=self.rtol,
            atol=self.atol,
        )
        if not solution.success:
            raise IntegrationError(solution.message)
        return solution.y.T

    def __call__(self, hamiltonian: np.ndarray, psi0: np.ndarray, times: np.ndarray) -> np.ndarray:
        """
        Runge-Kutta on dψ/dt = -iHψ, sampled at `times`.
        """
        return self._solve(-1j * np.asarray(hamiltonian, dtype=complex), np.asarray(psi0, dtype=complex), times)

    def lindblad(
        self, hamiltonian: np.ndarray, collapse: list[np.ndarray], rho0: np.ndarray, t_final: float
    ) -> np.ndarray:
        dim = len(hamiltonian)
        rho0 = np.asarray(rho0, dtype=complex)
        vec = self._solve(liouvillian(hamiltonian, collapse), rho0.ravel(), np.array([0.0, t_final]))[-1]
        return vec.reshape(dim, dim)
