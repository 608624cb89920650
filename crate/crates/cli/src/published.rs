//! Published reference values printed next to the regenerated tables.
//! `None` marks a cell where the method does not apply.

pub const TABLE1_ALPHAS: [f64; 11] = [0.99, 0.992, 0.994, 0.996, 0.998, 1.0, 1.002, 1.004, 1.006, 1.008, 1.01];
pub const TABLE2_ALPHAS: [f64; 11] = [0.9, 0.92, 0.94, 0.96, 0.98, 1.0, 1.02, 1.04, 1.06, 1.08, 1.1];
pub const TABLE4_DEGREES: [u32; 7] = [2, 4, 6, 8, 10, 12, 14];
pub const TABLE4_ALPHA: f64 = 1.06;
pub const TABLE1_DEGREE: u32 = 6;
pub const TABLE2_DEGREE: u32 = 4;

const NA: Option<f64> = None;

pub const TABLE1_DSBC: [Option<f64>; 11] = [
    Some(0.9681),
    Some(0.8759),
    Some(0.793),
    Some(0.7178),
    Some(0.65),
    Some(0.5896),
    Some(0.5891),
    Some(0.5895),
    Some(0.59),
    Some(0.5906),
    Some(0.5915),
];
pub const TABLE1_MSBC: [Option<f64>; 11] = [
    NA,
    NA,
    NA,
    NA,
    NA,
    Some(0.5903),
    Some(0.6225),
    Some(0.6565),
    Some(0.6881),
    Some(0.7167),
    Some(0.7428),
];
pub const TABLE1_SSBC: [Option<f64>; 11] = [
    Some(0.9681),
    Some(0.8759),
    Some(0.793),
    Some(0.7177),
    Some(0.65),
    Some(0.5907),
    NA,
    NA,
    NA,
    NA,
    NA,
];

pub const TABLE2_DSBC: [Option<f64>; 11] = [
    Some(0.249),
    Some(0.2176),
    Some(0.1984),
    Some(0.19),
    Some(0.1929),
    Some(0.21),
    Some(0.5),
    Some(0.69),
    Some(0.8129),
    Some(0.8936),
    Some(0.9465),
];
pub const TABLE2_MSBC: [Option<f64>; 11] = [
    NA,
    NA,
    NA,
    NA,
    NA,
    Some(0.21),
    Some(0.5),
    Some(0.69),
    Some(0.8129),
    Some(0.8936),
    Some(0.9465),
];
pub const TABLE2_SSBC: [Option<f64>; 11] = [
    Some(0.2491),
    Some(0.2176),
    Some(0.1984),
    Some(0.19),
    Some(0.1929),
    Some(0.21),
    NA,
    NA,
    NA,
    NA,
    NA,
];

/// `γ = αβ − α + 1` of the DSBC solutions, per `α` column of tables I and II.
pub const TABLE3_EXAMPLE1: [f64; 11] = [
    0.01, 0.008, 0.006, 0.004, 0.002, 8e-6, -0.002, -0.004, -0.006, -0.008, -0.01,
];
pub const TABLE3_EXAMPLE2: [f64; 11] = [
    0.1031, 0.0837, 0.0644, 0.0456, 0.0273, 0.01, 0.0102, 0.0104, 0.0106, 0.0108, 0.011,
];

/// Reach-avoid lower bounds per degree.
pub const TABLE4_RABC: [f64; 7] = [0.2027, 0.3689, 0.3995, 0.4136, 0.4953, 0.5547, 0.6080];
/// Published bounds of the earlier reach-avoid certificate used for
/// comparison; that method is not implemented here.
pub const TABLE4_COMPARISON: [f64; 7] = [0.1591, 0.2824, 0.3453, 0.3669, 0.4606, 0.5218, 0.5732];
