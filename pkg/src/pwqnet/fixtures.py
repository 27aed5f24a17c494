"""Load the example functions shipped with the package."""
import json
from importlib import resources

from .pwq import Pwa1D, Pwq1D
from .pwqnd import PwaND, PwqND

RECONSTRUCTED_NOTE = "partition reconstructed, not paper-exact"


def fixture_path(name):
    return resources.files("pwqnet") / "fixtures" / name


def load_json(name):
    return json.loads(fixture_path(name).read_text())


def three_segment():
    return Pwq1D.from_dict(load_json("eq16.json"))


def alg1_lift():
    return Pwa1D.from_dict(load_json("eq17_lift.json"))


def qp_lift():
    return Pwa1D.from_dict(load_json("eq19_lift.json"))


def single_segment():
    return Pwq1D.from_dict(load_json("single_segment.json"))


def nonconvex():
    """Slope drops from 1 to 0 at the middle breakpoint (constructed without
    validation so the failure can be observed)."""
    return Pwq1D.from_dict(load_json("nonconvex.json"))


def ocp2d():
    """Reconstructed 2D partition and the published lifting table."""
    return PwqND.from_dict(load_json("ocp2d_reconstructed_phi.json")), ocp2d_lift()


def ocp2d_lift():
    return PwaND.from_dict(load_json("ocp2d_h.json"))


def ocp2d_value_function():
    """Exploratory fixture: one-step value function on its critical regions."""
    return PwqND.from_dict(load_json("ocp2d_dare_phi.json"))
