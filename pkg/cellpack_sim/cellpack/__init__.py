"""SOC/SOH-aware charging control for cell-level-inverter battery packs."""
