from dscert.factored import FactoredInt
from dscert.graph import GcdGraph


def graph(V, W, E, mu=None, P=(), f=None, g=None) -> GcdGraph:
    """Graph with ids v<n>, w<n> for integer vertex lists; mu defaults to 1."""
    Vd = {f"v{n}": FactoredInt.from_int(n) for n in V}
    Wd = {f"w{n}": FactoredInt.from_int(n) for n in W}
    mu = mu or {k: 1 for k in [*Vd, *Wd]}
    return GcdGraph.build(Vd, Wd, mu, [(f"v{a}", f"w{b}") for a, b in E], P, f, g)
