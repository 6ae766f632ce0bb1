import importlib.util
from pathlib import Path

from conftest import DATA

SCRIPT = Path(__file__).resolve().parent.parent / "scripts" / "make_data.py"


def test_shipped_data_is_reproducible(tmp_path):
    spec = importlib.util.spec_from_file_location("make_data", SCRIPT)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    written = mod.build(tmp_path)
    assert written
    for path in sorted(p for p in tmp_path.rglob("*") if p.is_file()):
        rel = path.relative_to(tmp_path)
        assert (DATA / rel).read_bytes() == path.read_bytes(), rel
    shipped = {p.relative_to(DATA) for p in DATA.rglob("*") if p.is_file()}
    assert shipped == {p.relative_to(tmp_path) for p in tmp_path.rglob("*") if p.is_file()}
