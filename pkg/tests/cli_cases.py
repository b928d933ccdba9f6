"""CLI regressions shared by the CLI tests and the acceptance suite."""

REGRESSIONS = {
    "expand": ["expand", "--x", "7/10", "--format", "json"],
    "cylinder": ["cylinder", "--word", "1 2 3"],
    "measure-jk": ["measure", "--kind", "jk", "--prefix", "1", "--suffix", "1 2", "--l", "10", "--tol", "1e-9"],
    "measure-H": ["measure", "--kind", "H", "--l", "1000"],
    "dimension": ["dimension", "--B", "2", "--g", "F2", "--M", "32", "--tol", "1e-9"],
    "dimension-n": ["dimension", "--B", "2", "--g", "F2", "--M", "4", "--n", "6"],
    "profile": ["profile", "--B-grid", "1.5,2", "--M", "16"],
    "cantor": ["cantor", "--L", "8", "--M", "2", "--B", "2", "--depth", "400", "--samples", "16", "--seed", "3"],
    "zero-one": ["zero-one", "--family", "F2", "--phi", "n^0.4", "--window", "100:1000", "--samples", "300",
                 "--seed", "7"],
}
