import numpy as np
from rydwalk.microphysics import exchange_profile

df = exchange_profile(np.linspace(0, np.pi, 7))
print(df.pivot(index="phi", columns="n", values="V"))
