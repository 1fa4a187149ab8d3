import random

from hypothesis import strategies as st

from strongmam.corpus import random_closed, random_lsc


@st.composite
def closed_terms(draw, max_size=30):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(2, max_size))
    return random_closed(random.Random(seed), n)


@st.composite
def lsc_terms(draw, max_size=25):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_size))
    return random_lsc(random.Random(seed), n)
