//! Index of the claims that report records point to.

const TABLE: &str = include_str!("claims.tsv");

/// `(anchor, statement)` pairs in table order.
pub fn claims() -> impl Iterator<Item = (&'static str, &'static str)> {
    TABLE.lines().skip(1).filter(|l| !l.trim().is_empty()).filter_map(|l| l.split_once('\t'))
}

pub fn resolve(anchor: &str) -> Option<&'static str> {
    claims().find(|(a, _)| *a == anchor).map(|(_, s)| s)
}

pub const KERNEL_MARKOV: &str = "kernel-markov-identities";
pub const KERNEL_INTERTWINING: &str = "kernel-intertwining";
pub const KERNEL_INJECTIVE: &str = "kernel-injective-dense";
pub const KERNEL_DETERMINANT: &str = "kernel-determinant";
pub const ENTROPY_SEPARATION: &str = "kernel-entropy-separation";
pub const CHAIN: &str = "chain-operator";
pub const BERNOULLI: &str = "bernoulli-p-entropy";
pub const ROTATION_BOUND: &str = "rotation-p-entropy-bound";
pub const ROTATION_DECAY: &str = "rotation-p-entropy-decay";
pub const HEIGHT_RECURRENCE: &str = "rankone-height-recurrence";
pub const TOWER_MEASURE: &str = "rankone-tower-measure";
pub const TRANSLATE_DISJOINT: &str = "rankone-translate-disjointness";
pub const ODOMETER: &str = "odometer-control";
pub const CYLINDER: &str = "poisson-cylinder-measure";
pub const INDEPENDENCE: &str = "poisson-independence";
pub const SUSPENSION: &str = "suspension-p-entropy";
pub const SUSPENSION_MC: &str = "suspension-monte-carlo";

pub const ALL: [&str; 17] = [
    KERNEL_MARKOV,
    KERNEL_INTERTWINING,
    KERNEL_INJECTIVE,
    KERNEL_DETERMINANT,
    ENTROPY_SEPARATION,
    CHAIN,
    BERNOULLI,
    ROTATION_BOUND,
    ROTATION_DECAY,
    HEIGHT_RECURRENCE,
    TOWER_MEASURE,
    TRANSLATE_DISJOINT,
    ODOMETER,
    CYLINDER,
    INDEPENDENCE,
    SUSPENSION,
    SUSPENSION_MC,
];
