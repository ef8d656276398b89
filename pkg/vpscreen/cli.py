"""
Command line front end: screening tables, the control identity, potential dumps and per-ion properties.
"""

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence
from tqdm import tqdm
from .assembly import ScreeningCalculator
from .config import FORMATS, MODES, NUCLEI, RunConfig
from .dirac import SpectrumCache
from .logging import DefaultLogger, TqdmWrapper
from .utils import ConvergenceError


COLUMNS = {
    "table1": ["Z", "uehl_a_eV", "uehl_b_eV", "wk_a_eV", "wk_b_eV", "sum_eV", "dEdZ_eV", "discrepancy"],
    "table2": ["Z", "rms_fm", "uehl_a_eV", "uehl_b_eV", "wk_a_eV", "wk_b_eV", "total_eV", "unc_eV"],
    "potentials": ["Z", "uehling", "wk", "wk_density"],
    "properties": ["Z", "rms_fm", "binding_eV", "uehling_eV", "wk_eV"],
}

EXIT_OK = 0
EXIT_CONVERGENCE = 1
EXIT_CONFIG = 2


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"

    return str(value)


def _clean(row: Dict[str, object]) -> Dict[str, object]:
    return {k: int(v) if k == "Z" and float(v).is_integer() else v for k, v in row.items()}


def emit(rows: Sequence[Dict[str, object]], fmt: str, columns: List[str]) -> str:
    """
    Renders `rows` as csv, json or an aligned text table, with floats at 17 significant digits.
    :param rows: The report rows, keyed by column name
    :param fmt: One of "table", "csv" or "json"
    :param columns: The column order
    """

    rows = [_clean(r) for r in rows]

    if fmt == "json":
        return json.dumps([{c: r[c] for c in columns} for r in rows], indent=2) + "\n"

    text = [[_format_value(r[c]) for c in columns] for r in rows]

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(text)

        return buffer.getvalue()
    elif fmt == "table":
        widths = [max([len(c)] + [len(t[i]) for t in text]) for i, c in enumerate(columns)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(line, widths)) for line in [columns] + text]

        return "\n".join(lines) + "\n"

    raise ValueError(f"Unknown format '{fmt}', expected one of {FORMATS}")


class Runner(object):
    def __init__(self, config: RunConfig):
        """
        Evaluates the configured mode for every nuclear charge of `config`.
        """

        self.config = config
        self.cache = SpectrumCache(config.cache_dir) if config.cache_dir else None

    def _logger(self):
        if not self.config.verbose:
            return DefaultLogger()

        return TqdmWrapper(leave=False)

    def calculator(self, z: int, logging=None) -> ScreeningCalculator:
        return ScreeningCalculator(
            self.config.model(z), self.config.wk_config(), wk_finite_size=self.config.wk_finite_size,
            cache=self.cache, logging=logging, **self.config.grid_kwargs()
        )

    def _potentials(self, calculator: ScreeningCalculator) -> Dict[str, object]:
        directory = self.config.output_dir
        os.makedirs(directory, exist_ok=True)

        z = int(calculator.z)
        paths = {
            "uehling": os.path.join(directory, f"uehling_Z{z}.txt"),
            "wk": os.path.join(directory, f"wk_Z{z}.txt"),
            "wk_density": os.path.join(directory, f"wk_density_Z{z}.txt"),
        }

        calculator.potential_table("uehling").dump(paths["uehling"])
        calculator.potential_table("wk").dump(paths["wk"])
        calculator.wk_density.dump(paths["wk_density"], abscissa=calculator.loop.grid.outer, name=f"wk density Z={z}")

        return {"Z": z, **paths}

    def evaluate(self, z: int) -> Dict[str, object]:
        logging = self._logger()

        try:
            calculator = self.calculator(z, logging)
            mode = self.config.mode

            if mode == "table2":
                return calculator.total().as_row()
            elif mode == "table1":
                return calculator.control_table1().as_row()
            elif mode == "properties":
                return calculator.properties().as_row()

            return self._potentials(calculator)
        except ConvergenceError as e:
            raise ConvergenceError(f"Z = {z}: {e}", e.estimate, e.error) from e
        except ValueError as e:
            raise ValueError(f"Z = {z}: {e}") from e
        finally:
            logging.close()

    def run(self) -> List[Dict[str, object]]:
        with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
            return list(executor.map(self.evaluate, self.config.z_list))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vpscreen", description="Vacuum polarization screening corrections to the ground state of He-like ions"
    )

    parser.add_argument("--config", default=None, help="File of 'key = value' settings, overridden by flags")
    parser.add_argument("--z", type=int, nargs="+", default=None, dest="z_list", help="Nuclear charge numbers")
    parser.add_argument("--rms", type=float, default=None, dest="rms_fm", help="rms radius (fm), single Z only")
    parser.add_argument("--nucleus", choices=NUCLEI, default=None)
    parser.add_argument("--mode", choices=MODES, default=None)
    parser.add_argument("--kappa-max", type=int, default=None, dest="kappa_max")
    parser.add_argument("--omega-nodes", type=int, default=None, dest="omega_nodes")
    parser.add_argument("--splines", type=int, default=None)
    parser.add_argument("--order", type=int, default=None)
    parser.add_argument("--rmax", type=float, default=None, dest="r_max", help="Box radius in units of 1 / (alpha Z)")
    parser.add_argument("--tol", type=float, default=None, help="Relative tolerance of the WK partial wave tail only")
    parser.add_argument("--wk-finite-size", action="store_true", default=None, dest="wk_finite_size")
    parser.add_argument("--format", choices=FORMATS, default=None)
    parser.add_argument("--cache-dir", default=None, dest="cache_dir")
    parser.add_argument("--output-dir", default=None, dest="output_dir", help="Directory of the potential dumps")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--verbose", action="store_true", default=None)

    return parser


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))

    try:
        config = RunConfig.load(args.pop("config"), **args)
    except (OSError, ValueError) as e:
        parser.print_usage(sys.stderr)
        tqdm.write(f"vpscreen: error: {e}", file=sys.stderr)

        return EXIT_CONFIG

    try:
        rows = Runner(config).run()
    except ConvergenceError as e:
        tqdm.write(f"vpscreen: convergence failure: {e}", file=sys.stderr)

        return EXIT_CONVERGENCE
    except ValueError as e:
        tqdm.write(f"vpscreen: numerical failure: {e}", file=sys.stderr)

        return EXIT_CONVERGENCE

    sys.stdout.write(emit(rows, config.format, COLUMNS[config.mode]))

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
