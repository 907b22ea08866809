"""Diophantine approximation harness: interval sets, overlaps, second moments, anatomy counts."""

from .anatomy import AnatomyReport, anatomy_count, anatomy_report
from .catlin import catlin_star
from .counterexample import CounterexampleReport, model_counterexample
from .intervals import IntervalUnion, a_q_set, k_q_set, measure
from .overlap import OverlapReport, overlap_report, overlap_scan
from .second_moment import NoY, build_edge_set, choose_y, edge_member, mu_graph_from_psi, second_moment

__all__ = [
    "AnatomyReport", "anatomy_count", "anatomy_report", "catlin_star", "CounterexampleReport",
    "model_counterexample", "IntervalUnion", "a_q_set", "k_q_set", "measure", "OverlapReport",
    "overlap_report", "overlap_scan", "NoY", "build_edge_set", "choose_y", "edge_member",
    "mu_graph_from_psi", "second_moment",
]
