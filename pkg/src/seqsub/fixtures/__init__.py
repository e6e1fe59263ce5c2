"""Bundled golden assets: instances and points the acceptance tests pin."""

from importlib import resources


def fixture_path(name: str):
    """Filesystem path of a bundled fixture JSON (context-managed source)."""
    return resources.files(__package__).joinpath(name)


APPENDIX_C_INSTANCE = "appendix_c_instance.json"
EXAMPLE_1_INSTANCE = "example_1_instance.json"
APPENDIX_B_POINT = "appendix_b_point.json"
