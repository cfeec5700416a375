import pytest
from hypothesis import given, strategies as st

from nbart.errors import InvalidParams
from nbart.topology import Params, conset, prodset


def test_prodsets_wrap_around():
    pr = Params(n_p=5, n_c=3, f_p=1, f_c=1, b=2)
    assert prodset(0, pr) == (0, 1, 2)
    assert prodset(1, pr) == (3, 4, 0)
    assert prodset(2, pr) == (1, 2, 3)


def test_consets_invert_prodsets():
    pr = Params(n_p=5, n_c=3, f_p=1, f_c=1, b=2)
    assert [sorted(conset(i, pr)) for i in range(5)] == [[0, 1], [0, 2], [0, 2], [1, 2], [1]]


@given(n_p=st.integers(2, 12), n_c=st.integers(1, 12), f_p=st.integers(0, 5), data=st.data())
def test_assignment_is_balanced(n_p, n_c, f_p, data):
    if f_p >= n_p:
        return
    b = data.draw(st.integers(1, n_p - f_p))
    pr = Params(n_p=n_p, n_c=n_c, f_p=f_p, f_c=0, b=b)
    sizes = [len(conset(i, pr)) for i in range(n_p)]
    assert sum(sizes) == n_c * (b + f_p)
    assert max(sizes) - min(sizes) <= 1
    for j in range(n_c):
        assert len(set(prodset(j, pr))) == b + f_p


def test_violations_name_the_invariant():
    assert Params(3, 2, 1, 1, 3).violations() == ["1 <= B <= N_P - F_P"]
    assert "N_P >= 2*F_P + 1" in Params(2, 2, 1, 0, 1).violations()
    assert Params(2, 2, 1, 0, 1).violations("basic") == []
    assert "N_C >= F_C + Nt_C + 1" in Params(5, 3, 1, 1, 2, nt_p=2, nt_c=2).violations("game")
    assert Params(5, 4, 1, 1, 2, nt_p=2, nt_c=2).violations("game") == []
    with pytest.raises(InvalidParams, match="2\\^omega"):
        Params(9, 2, 1, 1, 2, omega=3).validate()
