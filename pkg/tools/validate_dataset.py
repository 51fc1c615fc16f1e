#!/usr/bin/env python3
"""
Sales Dataset Validator CLI
Checks that a CSV loads with the canonical schema, survives cleaning, and has
at least one (Region, type) series long enough to build a training window.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from price_core.data import SERIES_KEY, clean, load_csv  # noqa: E402
from price_core.errors import PriceRadarError  # noqa: E402
from price_core.features import window_targets  # noqa: E402

MIN_SERIES_WEEKS = 13  # default window of 12 plus one target week


def validate_dataset(path: str, window_length: int = MIN_SERIES_WEEKS - 1) -> bool:
    """
    Validate a sales CSV.
    Returns True if it can feed training, False otherwise.
    """
    try:
        table = clean(load_csv(path))
    except PriceRadarError as e:
        print(f"❌ {type(e).__name__}: {e}")
        return False

    report = table.report
    groups = table.frame.groupby(SERIES_KEY)
    lengths = groups.size()
    windows = groups["Date"].apply(lambda d: len(window_targets(d.to_numpy(), window_length)))
    usable = windows[windows > 0]

    if report.total_dropped:
        share = report.total_dropped / report.rows_before
        print(f"⚠️  {report.total_dropped:,} of {report.rows_before:,} rows dropped ({share:.1%})")
        for reason, n in report.dropped.items():
            if n:
                print(f"   - {reason}: {n:,}")

    if usable.empty:
        print(f"❌ No series has {window_length + 1} consecutive usable weeks (longest: {int(lengths.max())})")
        return False
    if len(usable) < len(lengths):
        print(f"⚠️  {len(lengths) - len(usable)} series too short for a {window_length}-week window")

    print("✅ Dataset validation passed")
    print(f"📁 Location: {Path(path).absolute()}")
    print(f"📄 Rows: {report.rows_after:,} clean, {len(usable)} usable series")
    return True


def main():
    """CLI entry point"""
    import argparse

    parser = argparse.ArgumentParser(description="Validate a PriceRadar sales CSV")
    parser.add_argument("--path", default="data/avocado.csv", help="Path to the sales CSV")
    parser.add_argument("--window", type=int, default=MIN_SERIES_WEEKS - 1, help="Window length in weeks")

    args = parser.parse_args()

    print("🔍 PriceRadar Dataset Validator")
    print("=" * 40)

    success = validate_dataset(args.path, args.window)

    if not success:
        print("\n💡 Remediation: the CSV needs these columns (case-insensitive):")
        print("   Date, AveragePrice, type, year, Region, 4046, 4225, 4770, Salesvolume, weather")
        sys.exit(1)

    print("\n🎉 Ready for training!")
    sys.exit(0)


if __name__ == "__main__":
    main()
