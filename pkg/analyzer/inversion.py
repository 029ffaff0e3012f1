"""Recovery of susceptibilities from down-converted spectra."""
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd
from scipy import linalg

from models.comb import CombSpec
from models.errors import CombSpecError, RankDeficiencyError
from models.inversion import ChiKey, FoldingSolution, FoldingSystem, LinearInversion
from models.signal import Spectrum, slot_count

# сколько неразрешимых наборов перечислять в сообщении об ошибке
MAX_LISTED = 10


class Inversion:
    """Обращение линейных и свёрнутых спектров в отсчёты χ."""

    @staticmethod
    def invert_linear(spectrum: Spectrum, combs: Sequence[CombSpec]) -> LinearInversion:
        """
        Восстановить χ⁽¹⁾ на зубцах по пикам линейного спектра.

        Для пика с единственной неизвестной: χ = C/Σw (или (C/Σw)* для
        сопряжённого аргумента); оценки по пикам ±m усредняются.
        Пики, у которых |E_a·E_b| < ε·A², помечаются невосстановимыми.

        Returns:
            LinearInversion: таблица (tooth, frequency, re, imag,
            constraint_count, residual, recoverable) и отчёт
        """
        terms = spectrum.terms
        if terms.empty or slot_count(terms) != 1:
            raise CombSpecError("invert_linear needs a linear spectrum with recorded terms")
        floor = max(c.tooth_floor for c in combs)
        scale = max(c.amplitude for c in combs) ** 2

        frame = pd.DataFrame({
            "index": terms["index"].to_numpy(dtype=np.int64),
            "key": np.abs(terms["arg1"].to_numpy(dtype=np.int64)),
            "conj": terms["arg1"].to_numpy(dtype=np.int64) < 0,
            "tooth": np.abs(terms["order1"].to_numpy(dtype=np.int64)),
            "weight": terms["weight"].to_numpy(dtype=complex),
        })
        detect_freq = np.abs(terms["detect_index"].to_numpy(dtype=float)) * spectrum.step
        with np.errstate(divide="ignore", invalid="ignore"):
            envelope = np.where(detect_freq > 0, np.abs(frame["weight"].to_numpy()) / detect_freq, 0.0)
        frame["envelope"] = envelope / scale

        estimates: Dict[int, List[complex]] = {}
        multi = 0
        for index, group in frame.groupby("index", sort=True):
            if group["key"].nunique() != 1 or group["conj"].nunique() != 1:
                multi += 1
                continue
            total = complex(group["weight"].sum())
            if group["envelope"].max() < floor or total == 0:
                continue
            value = spectrum.amplitude_at(int(index)) / total
            if bool(group["conj"].iloc[0]):
                value = value.conjugate()
            estimates.setdefault(int(group["key"].iloc[0]), []).append(value)

        rows = []
        teeth = frame.groupby("key")["tooth"].first()
        for key, tooth in teeth.items():
            values = estimates.get(int(key), [])
            if values:
                mean = complex(np.mean(values))
                residual = float(max(abs(v - mean) for v in values))
                rows.append((int(tooth), key * spectrum.step, mean.real, mean.imag, len(values), residual, True))
            else:
                rows.append((int(tooth), key * spectrum.step, np.nan, np.nan, 0, np.nan, False))
        table = pd.DataFrame(rows, columns=[
            "tooth", "frequency", "re", "imag", "constraint_count", "residual", "recoverable",
        ])
        used = frame[frame["key"].isin(list(estimates))]
        magnitudes = np.abs(used["weight"].to_numpy())
        report = {
            "spikes": int(spectrum.size),
            "recovered": int(table["recoverable"].sum()),
            "unrecoverable": int((~table["recoverable"]).sum()),
            "multi_unknown_spikes": multi,
            "weight_ratio": float(magnitudes.max() / magnitudes.min()) if magnitudes.size else float("nan"),
        }
        return LinearInversion(table=table, report=report)

    @staticmethod
    def canonical_keys(args: np.ndarray):
        """
        Канонический набор аргументов χ⁽³⁾ и признак сопряжения.

        χ(−ω₁, −ω₂, −ω₃) = χ(ω₁, ω₂, ω₃)*; канонический набор имеет
        положительную сумму (при нулевой - лексикографически больший).
        """
        direct = np.sort(args, axis=1)
        mirrored = -direct[:, ::-1]
        total = direct.sum(axis=1)
        lexicographic = np.array([tuple(d) >= tuple(m) for d, m in zip(direct, mirrored)], dtype=bool)
        keep = (total > 0) | ((total == 0) & lexicographic)
        keys = np.where(keep[:, None], direct, mirrored)
        return keys, ~keep

    @staticmethod
    def build_folding_system(spectra: Union[Spectrum, Sequence[Spectrum]], lam: float = 0.0) -> FoldingSystem:
        """
        Собрать систему A·x = b по одному или нескольким четырёхгребёночным прогонам.

        Неизвестные - пары (Re, Im) χ⁽³⁾ для канонических наборов
        аргументов; строки - Re и Im каждого пика каждого прогона.
        Наборы, входящие только с нулевым весом, перечисляются как
        неограниченные.
        """
        if isinstance(spectra, Spectrum):
            spectra = [spectra]
        if not spectra:
            raise CombSpecError("need at least one spectrum")
        step = spectra[0].step
        frames = []
        for run, spectrum in enumerate(spectra):
            if spectrum.step != step:
                raise CombSpecError("all runs must share the frequency grid")
            terms = spectrum.terms
            if terms.empty:
                continue
            if slot_count(terms) != 3:
                raise CombSpecError("folding needs third-order spectra with recorded terms")
            args = terms[["arg1", "arg2", "arg3"]].to_numpy(dtype=np.int64)
            keys, conj = Inversion.canonical_keys(args)
            frames.append(pd.DataFrame({
                "run": run,
                "index": terms["index"].to_numpy(dtype=np.int64),
                "k1": keys[:, 0], "k2": keys[:, 1], "k3": keys[:, 2],
                "conj": conj,
                "weight": terms["weight"].to_numpy(dtype=complex),
            }))
        frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(
            columns=["run", "index", "k1", "k2", "k3", "conj", "weight"]
        )

        active = frame[frame["weight"] != 0]
        all_keys = sorted(set(zip(frame["k1"], frame["k2"], frame["k3"])))
        active_keys = sorted(set(zip(active["k1"], active["k2"], active["k3"])))
        active_set = set(active_keys)
        unconstrained = [tuple(int(v) for v in k) for k in all_keys if k not in active_set]
        column = {k: i for i, k in enumerate(active_keys)}

        spikes = [
            (run, int(index))
            for run, spectrum in enumerate(spectra)
            for index in spectrum.indices
        ]
        row_of = {spike: i for i, spike in enumerate(spikes)}
        matrix = np.zeros((2 * len(spikes), 2 * len(active_keys)))
        rhs = np.zeros(2 * len(spikes))
        for run, spectrum in enumerate(spectra):
            for index, value in zip(spectrum.indices, spectrum.amplitudes):
                row = row_of[(run, int(index))]
                rhs[2 * row], rhs[2 * row + 1] = value.real, value.imag

        if not active.empty:
            rows = np.array([row_of[(r, i)] for r, i in zip(active["run"], active["index"])])
            cols = np.array([column[k] for k in zip(active["k1"], active["k2"], active["k3"])])
            sigma = np.where(active["conj"].to_numpy(), -1.0, 1.0)
            weight = active["weight"].to_numpy(dtype=complex)
            # w·(x_r + iσx_i) = (w_r·x_r − σw_i·x_i) + i(w_i·x_r + σw_r·x_i)
            np.add.at(matrix, (2 * rows, 2 * cols), weight.real)
            np.add.at(matrix, (2 * rows, 2 * cols + 1), -sigma * weight.imag)
            np.add.at(matrix, (2 * rows + 1, 2 * cols), weight.imag)
            np.add.at(matrix, (2 * rows + 1, 2 * cols + 1), sigma * weight.real)
            pairs = pd.DataFrame({"row": rows, "col": cols}).drop_duplicates()
            counts = np.bincount(pairs["col"].to_numpy(), minlength=len(active_keys))
        else:
            counts = np.zeros(0, dtype=np.int64)

        row_table = pd.DataFrame(
            [(run, index, part) for run, index in spikes for part in ("re", "imag")],
            columns=["run", "index", "part"],
        )
        return FoldingSystem(
            matrix=matrix, rhs=rhs,
            keys=[tuple(int(v) for v in k) for k in active_keys],
            rows=row_table, constraint_counts=counts,
            unconstrained=unconstrained, step=step, lam=lam,
        )

    @staticmethod
    def _scaled(matrix: np.ndarray):
        norms = np.linalg.norm(matrix, axis=0)
        scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)
        return matrix * scale, scale

    @staticmethod
    def unresolved_keys(system: FoldingSystem, tolerance: float = 1e-8) -> List[ChiKey]:
        """
        Наборы аргументов, которые данные не фиксируют.

        Набор неразрешим, если его Re или Im имеет заметную компоненту
        в ядре нормированной матрицы A: такие неизвестные можно менять,
        не меняя наблюдаемых пиков.
        """
        if system.matrix.size == 0:
            return []
        scaled, _ = Inversion._scaled(system.matrix)
        kernel = linalg.null_space(scaled)
        if kernel.shape[1] == 0:
            return []
        weight = np.linalg.norm(kernel, axis=1).reshape(-1, 2).max(axis=1)
        return [system.keys[i] for i in np.flatnonzero(weight > tolerance)]

    @staticmethod
    def solve_folding(system: FoldingSystem) -> FoldingSolution:
        """
        Минимизировать ‖Ax − b‖² + λ‖x‖².

        Столбцы предварительно нормируются. λ = 0: scipy.linalg.lstsq после
        проверки ранга; λ > 0: разложение Холецкого нормальных уравнений.

        Raises:
            RankDeficiencyError: λ = 0 и ранг меньше числа неизвестных;
                перечисляет неразрешимые наборы аргументов
        """
        matrix, rhs = system.matrix, system.rhs
        unknowns = matrix.shape[1]
        if unknowns == 0:
            return FoldingSolution({}, Inversion._solution_table(system, np.zeros(0)), -rhs, 1.0, 0,
                                   list(system.unconstrained))
        scaled, scale = Inversion._scaled(matrix)
        singular = linalg.svdvals(scaled)
        tolerance = singular.max() * max(scaled.shape) * np.finfo(float).eps if singular.size else 0.0
        rank = int(np.count_nonzero(singular > tolerance))
        condition = float(singular.max() / singular.min()) if singular.size and singular.min() > 0 else float("inf")

        if system.lam == 0:
            if rank < unknowns:
                unresolved = Inversion.unresolved_keys(system)
                shown = ", ".join(str(key) for key in unresolved[:MAX_LISTED])
                if len(unresolved) > MAX_LISTED:
                    shown += f", ... ({len(unresolved) - MAX_LISTED} more)"
                raise RankDeficiencyError(
                    f"folding system has rank {rank} for {unknowns} real unknowns; "
                    f"unresolved argument sets (grid indices): {shown}; "
                    "use lam > 0 or add runs with other offsets",
                    unresolved=unresolved,
                )
            solution = linalg.lstsq(scaled, rhs)[0] * scale
        else:
            normal = scaled.T @ scaled + system.lam * np.diag(scale ** 2)
            factor = linalg.cho_factor(normal)
            solution = linalg.cho_solve(factor, scaled.T @ rhs) * scale

        residuals = matrix @ solution - rhs
        values = {
            key: complex(solution[2 * i], solution[2 * i + 1]) for i, key in enumerate(system.keys)
        }
        return FoldingSolution(
            values=values,
            table=Inversion._solution_table(system, solution),
            residuals=residuals,
            condition=condition,
            rank=rank,
            unconstrained=list(system.unconstrained),
        )

    @staticmethod
    def _solution_table(system: FoldingSystem, solution: np.ndarray) -> pd.DataFrame:
        keys = np.array(system.keys, dtype=np.int64).reshape(-1, 3)
        return pd.DataFrame({
            "arg1": keys[:, 0], "arg2": keys[:, 1], "arg3": keys[:, 2],
            "omega1": keys[:, 0] * system.step,
            "omega2": keys[:, 1] * system.step,
            "omega3": keys[:, 2] * system.step,
            "re": solution[0::2], "imag": solution[1::2],
            "constraint_count": np.asarray(system.constraint_counts, dtype=np.int64),
        })

    @staticmethod
    def rank_report(system: FoldingSystem) -> Dict[str, object]:
        """Отчёт о ранге: хватает ли данных для полного обращения и какие наборы не определены."""
        rank = system.rank()
        unknowns = 2 * system.unknown_count
        unresolved = Inversion.unresolved_keys(system)
        return {
            "rows": int(system.matrix.shape[0]),
            "real_unknowns": unknowns,
            "rank": rank,
            "deficiency": unknowns - rank,
            "unconstrained": len(system.unconstrained),
            "unresolved_keys": [list(key) for key in unresolved],
            "underdetermined": bool(rank < unknowns or system.unconstrained),
        }
