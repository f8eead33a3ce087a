#!/usr/bin/env python3
"""Script de verificacion para las configuraciones incluidas en configs/."""

import glob
import os

from cli.experiment import run_experiment
from report.config import RunConfig


def main() -> None:
    paths = sorted(glob.glob(os.path.join("configs", "*.json")) + glob.glob(os.path.join("configs", "*.yaml")))
    print("=" * 70)
    print(f"VERIFICACION: {len(paths)} configuraciones")
    print("=" * 70)

    failures = 0
    for index, path in enumerate(paths, 1):
        print(f"\n[{index}/{len(paths)}] {path}")
        try:
            config = RunConfig.load(path)
            print(f"[OK] Configuracion cargada: {config.title or '(sin titulo)'}")
        except Exception as exc:  # pylint: disable=broad-except
            print(f"[ERROR] Al cargar: {exc}")
            failures += 1
            continue

        try:
            report = run_experiment(config)
        except Exception as exc:  # pylint: disable=broad-except
            print(f"[ERROR] En ejecucion: {exc}")
            failures += 1
            continue

        for record in report.checks:
            estado = {None: "info", True: "OK", False: "FALLA"}[record.passed]
            print(f"    - {record.stage}: {estado}")
        if report.errors:
            print(f"  [AVISO] {len(report.errors)} errores")
            for error in report.errors:
                print(f"    {error['stage']}: {error['type']}: {error['message']}")
        if report.artifacts:
            print(f"  Archivos generados: {len(report.artifacts)}")
        if not report.overall_pass:
            failures += 1

    print("\n" + "=" * 70)
    print("RESUMEN:")
    print(f"  Configuraciones: {len(paths)}")
    print(f"  Con fallas: {failures}")
    print("=" * 70)


if __name__ == "__main__":
    main()
