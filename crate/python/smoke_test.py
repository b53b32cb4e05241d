"""Quick check that the extension module loads and agrees with itself."""

import json
import math
import pathlib
import random

import pybirefsim as bs


def main():
    assert "fig2" in bs.presets()

    scenario = bs.Scenario.load("fig2")
    scenario.resolution = 32
    assert scenario.patterns == ["cc"]
    again = bs.Scenario.from_toml(scenario.to_toml())
    assert again.to_toml() == scenario.to_toml()

    result = scenario.run(1.0)
    print(f"omega_b=1: raw {result.average_raw:.5f} corrected {result.average_corrected:.5f} "
          f"success {result.success_total:.4f}")
    assert result.average_raw < result.average_corrected <= 1.0
    assert 0.0 < result.success_patterns < result.success_total <= 1.0
    assert len(result.populations) == 6 and len(result.populations[0]) == len(result.times)

    land = result.landscapes[0]
    n_h, n_v = land.shape
    assert len(land.f_raw) == n_h * n_v
    assert math.isclose(land.integrated_fidelity("raw"), result.average_raw, rel_tol=1e-9)

    back = bs.Landscape.from_csv(land.to_csv(), "cc")
    assert back.to_csv() == land.to_csv()

    curve = land.tradeoff("corrected", [0.99])
    assert len(curve.thresholds) == 1001 and curve.retained[0] == curve.total

    rng = random.Random(7)
    amps = [complex(rng.gauss(0, 1), rng.gauss(0, 1)) for _ in range(4)]
    norm = math.sqrt(sum(abs(a) ** 2 for a in amps))
    amps = [a / norm for a in amps]
    corr = bs.optimal_correction(amps, "plus")
    raw = bs.raw_fidelity(amps, "plus")
    assert raw <= corr.fidelity_corrected + 1e-12
    u = corr.unitary
    det = u[0][0] * u[1][1] - u[0][1] * u[1][0]
    assert math.isclose(abs(det), 1.0, rel_tol=1e-9)

    try:
        bs.Scenario.load("no-such-preset-or-file")
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    check_schema()
    print("smoke test passed")


def check_schema():
    """Presets, as re-serialised by the library, satisfy the documented schema."""
    try:
        import jsonschema
        import tomli
    except ImportError:
        print("jsonschema/tomli not installed; schema check skipped")
        return
    path = pathlib.Path(__file__).resolve().parent.parent / "docs" / "config.schema.json"
    schema = json.loads(path.read_text())
    for name in bs.presets():
        jsonschema.validate(tomli.loads(bs.Scenario.load(name).to_toml()), schema)


if __name__ == "__main__":
    main()
