import numpy as np
from rydwalk.microphysics import contrast_curve

# a neighbour crosses resonance near a_x1 ≈ 2.25 a_x0
df = contrast_curve(np.linspace(-2.0, 0.5, 51))
print(df[df["dip"] | df["collision"]])
