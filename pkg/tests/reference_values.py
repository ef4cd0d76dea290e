"""Published reference figures the models are checked against.

Keys follow the report row names. Values are per bit width (8, 4, 2).
"""

AREA_UM2 = {
    "analog-reram": {
        "Arrays": (8600, 8600, 8600),
        "Temporal Driver Analog Transistors": (7180, 7180, 7180),
        "Temporal Driver Cache and Control Circuitry": (8900, 5100, 3100),
        "Voltage Drivers Analog Transistors": (26000, 8600, 8600),
        "Voltage Drivers: Cache and Control Circuitry": (18000, 10000, 7100),
        "Integrators": (6600, 6600, 6600),
        "ADCs": (5850, 5850, 5850),
        "Analog Routing": (2900, 2900, 2900),
    },
    "digital-reram": {
        "Array: 1MB ReRAM": (76000, 76000, 76000),
        "Multiply & Accumulate (256 in parallel)": (54000, 35000, 23000),
        "Input Buffers": (7000, 3500, 1750),
    },
    "sram": {
        "Array: 1MB SRAM": (775000, 775000, 775000),
        "Multiply & Accumulate (256 in parallel)": (54000, 35000, 23000),
        "Input Buffers": (7000, 3500, 1750),
    },
}
AREA_TOTAL_UM2 = {
    "analog-reram": (75000, 46000, 41000),
    "digital-reram": (137000, 114000, 101000),
    "sram": (836000, 814000, 800000),
}

LATENCY_NS = {
    "analog-reram": {
        "Array": (0.2, 0.2, 0.2),
        "Read: Temporal Driver": (128, 8, 8),
        "Read: ADC": (256, 16, 3),
        "Write: Temporal Driver×4": (512, 32, 32),
    },
    "digital-reram": {
        "Read: 1MB ReRAM": (176000,) * 3,
        "Read Transpose: 1MB ReRAM": (176000,) * 3,
        "Write: 1MB ReRAM": (164000,) * 3,
        "Multiply and Accumulate (256 in parallel)": (4000,) * 3,
    },
    "sram": {
        "Read: 1MB SRAM": (4000,) * 3,
        "Read Transpose: 1MB SRAM": (32000,) * 3,
        "Write: 1MB SRAM": (4000,) * 3,
        "Multiply and Accumulate (256 in parallel)": (4000,) * 3,
    },
}
# totals in microseconds, as printed
LATENCY_TOTAL_US = {
    "analog-reram": ("1.280", "0.080", "0.054"),
    "digital-reram": ("692", "692", "692"),
    "sram": ("44", "44", "44"),
}

ENERGY_NJ = {
    "analog-reram": {
        "Read: Array": (0.36, 0.13, 0.07),
        "Write: Array": (1.66, 0.31, 0.22),
        "Temporal Driver Analog Transistors (1 cycle)": (0.16, 0.08, 0.04),
        "Temporal Driver Digital Logic (1 cycle)": (0.04, 0.02, None),  # printed "<0.01"
        "Voltage Driver Analog Transistors (4 cycle write)": (0.08, 0.08, 0.08),
        "Voltage Driver Digital Logic (4 cycle write)": (0.02, 0.01, 0.01),
        "Read: Integrator": (2.81, 0.15, 0.15),
        "Read: ADC": (9.4, 0.59, 0.15),
        "Analog Cross Core Communication": (0.08, 0.06, 0.06),
    },
    "digital-reram": {
        "Read: 1MB ReRAM": (208, 208, 208),
        "Read Transpose: 1MB ReRAM": (208, 208, 208),
        "Write: 1MB ReRAM": (676, 676, 676),
        "Multiply and Accumulate (1M operations)": (1500, 900, 520),
        "Digital ReRAM Cross Core Communication": (431, 394, 370),
    },
    "sram": {
        "Read: 64 128kb SRAMs": (286, 286, 286),
        "Read Transpose: 64 128kb SRAMs": (2291, 2291, 2291),
        "Write: 64 128kb SRAMs": (385, 385, 385),
        "Multiply and Accumulate (1M operations)": (1500, 900, 520),
        "Digital SRAM Cross Core Communication": (1065, 1051, 1042),
    },
}
ENERGY_TOTAL_NJ = {
    "analog-reram": (28, 2.7, 1.3),
    "digital-reram": (7520, 5580, 4340),
    "sram": (12010, 10150, 8970),
}
# 8-bit kernel split (vmm, mvm, update)
KERNEL_ENERGY_NJ = {
    "analog-reram": (12.8, 12.8, 2.2),
    "digital-reram": (2140, 2140, 3250),
    "sram": (2850, 4855, 4300),
}
KERNEL_LATENCY_NS = {
    "analog-reram": (384, 384, 512),
    "digital-reram": (176000, 176000, 340000),
    "sram": (4000, 32000, 8000),
}

BITS = (8, 4, 2)
