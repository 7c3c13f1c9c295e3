"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import assume
from hypothesis import strategies as st

entries = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


@st.composite
def matrices(draw, min_abs_det=0.05):
    m = np.array(draw(st.lists(entries, min_size=9, max_size=9))).reshape(3, 3)
    assume(abs(np.linalg.det(m)) > min_abs_det)
    return m


@st.composite
def well_conditioned(draw, max_cond=4.0):
    m = draw(matrices(min_abs_det=0.1))
    assume(np.linalg.cond(m) <= max_cond)
    return m


@st.composite
def rotations(draw):
    v = np.array(draw(st.lists(st.floats(-1, 1), min_size=3, max_size=3)))
    assume(np.linalg.norm(v) > 0.1)
    angle = draw(st.floats(-np.pi, np.pi))
    from matuniform.smallmat import rotation
    return rotation(v, angle)
