//! Closed-form bounds on coverage, termination time and energy.
//!
//! Two families live here. The first covers open regions explored from a
//! single entry: the travel radius of an agent, the size of the Manhattan
//! balls around the entry and the termination-time and agent-count bounds
//! of the fast-termination approach. The second is the exact worst-case
//! analysis of a linear region under the adversarial scheduler, with the
//! entry at an edge or in the interior.
//!
//! All functions are pure. Formulas are evaluated in `f64`; inputs that
//! produce fractional agent counts are kept fractional and floored only
//! where an agent index is needed.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("initial energy {e0} leaves no travel range above critical energy {ecrit}")]
    NoTravelRange { e0: f64, ecrit: f64 },
    #[error("travel distance must be at least 2, got {0}")]
    DistanceTooSmall(i64),
    #[error("entry interval must be at least {min}, got {dt}")]
    Interval { dt: f64, min: f64 },
    #[error("power ratio must lie in [0, 1], got {0}")]
    PowerRatio(f64),
    #[error("linear region needs at least {min} cells, got {n}")]
    TooFewCells { n: u32, min: u32 },
    #[error("entry cell {j} is not interior with j <= n - j on a line of {n} cells")]
    EntryCell { n: u32, j: u32 },
    #[error("variant {0} needs an interior entry; use the edge constructor")]
    WrongVariant(LinearVariant),
}

/// Largest distance from the entry a mobile agent can travel before it must
/// settle.
pub fn d_max(e0: f64, ecrit_mobile: f64) -> Result<i64, BoundsError> {
    let d = (e0 - ecrit_mobile - 1.0).floor();
    if d < 1.0 {
        return Err(BoundsError::NoTravelRange {
            e0,
            ecrit: ecrit_mobile,
        });
    }
    Ok(d as i64)
}

/// Cell counts of the Manhattan balls around the entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallCounts {
    /// Cells within distance `d_max - 2`.
    pub inner: i64,
    /// Cells within distance `d_max - 1`, the coverage bound of the
    /// max-coverage approach.
    pub upper: i64,
}

pub fn ball_counts(d_max: i64) -> Result<BallCounts, BoundsError> {
    if d_max < 2 {
        return Err(BoundsError::DistanceTooSmall(d_max));
    }
    let sq = |x: i64| x * x;
    Ok(BallCounts {
        inner: sq(d_max - 2) + sq(d_max - 1),
        upper: sq(d_max) + sq(d_max - 1),
    })
}

/// Upper bounds for the fast-termination approach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approach1Bounds {
    pub termination: f64,
    /// Bound on agents entered, which also bounds the covered area.
    pub agents: f64,
}

pub fn approach1_bounds(d_max: i64, dt: f64) -> Result<Approach1Bounds, BoundsError> {
    check_interval(dt, 1.0)?;
    let inner = ball_counts(d_max)?.inner as f64;
    let d = d_max as f64;
    Ok(Approach1Bounds {
        termination: (inner + 1.0) * dt + 2.0 * d,
        agents: inner + 1.0 + 2.0 * d / dt,
    })
}

/// Whether settled agents keep enough energy to outlast the termination
/// bound.
pub fn settled_survival(ecrit_settled: f64, alpha: f64, termination_bound: f64) -> bool {
    alpha == 0.0 || ecrit_settled / alpha > termination_bound
}

fn check_interval(dt: f64, min: f64) -> Result<(), BoundsError> {
    if dt.is_finite() && dt >= min {
        Ok(())
    } else {
        Err(BoundsError::Interval { dt, min })
    }
}

fn check_alpha(alpha: f64) -> Result<(), BoundsError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(BoundsError::PowerRatio(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinearVariant {
    /// Entry at the left end of the line.
    Edge,
    /// Interior entry explored greedily (SLLG-EA, SLTT-EA).
    MidGreedy,
    /// Interior entry explored depth-first.
    MidSldf,
}

impl LinearVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            LinearVariant::Edge => "edge",
            LinearVariant::MidGreedy => "mid_greedy",
            LinearVariant::MidSldf => "mid_sldf",
        }
    }
}

impl fmt::Display for LinearVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a linear case has no interior energy-minimizing interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoOptimum {
    /// With no ground consumption the total energy falls monotonically in ΔT.
    ZeroPowerRatio,
    /// The stationarity equation has no real root; carries the non-positive
    /// quantity under the square root.
    NonPositiveDenominator(f64),
}

impl fmt::Display for NoOptimum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoOptimum::ZeroPowerRatio => {
                f.write_str("power ratio is zero, total energy decreases with the interval")
            }
            NoOptimum::NonPositiveDenominator(d) => {
                write!(f, "stationarity denominator {d} is not positive")
            }
        }
    }
}

/// A linear region of `n` cells with the entry at cell `j` (1-based from the
/// left), agents entering every `dt` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCase {
    pub n: u32,
    pub j: u32,
    pub dt: f64,
    pub alpha: f64,
    pub variant: LinearVariant,
}

impl LinearCase {
    pub fn edge(n: u32, dt: f64, alpha: f64) -> Result<Self, BoundsError> {
        if n < 1 {
            return Err(BoundsError::TooFewCells { n, min: 1 });
        }
        check_interval(dt, 2.0)?;
        check_alpha(alpha)?;
        Ok(LinearCase {
            n,
            j: 1,
            dt,
            alpha,
            variant: LinearVariant::Edge,
        })
    }

    pub fn mid(
        n: u32,
        j: u32,
        dt: f64,
        alpha: f64,
        variant: LinearVariant,
    ) -> Result<Self, BoundsError> {
        if variant == LinearVariant::Edge {
            return Err(BoundsError::WrongVariant(variant));
        }
        if j < 2 || j + 1 > n || j > n - j {
            return Err(BoundsError::EntryCell { n, j });
        }
        check_interval(dt, 2.0)?;
        check_alpha(alpha)?;
        Ok(LinearCase {
            n,
            j,
            dt,
            alpha,
            variant,
        })
    }

    fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    fn jf(&self) -> f64 {
        f64::from(self.j)
    }

    /// Worst-case termination time, `n(ΔT+2) − ΔT`, for every variant.
    pub fn termination_bound(&self) -> f64 {
        self.nf() * (self.dt + 2.0) - self.dt
    }

    /// Number of agents that enter before termination.
    pub fn agent_count(&self) -> f64 {
        self.nf() * (self.dt + 2.0) / self.dt - 1.0
    }

    /// Index of the last agent to enter while the left branch of an interior
    /// entry is still open.
    pub fn left_branch_agents(&self) -> Option<f64> {
        match self.variant {
            LinearVariant::Edge => None,
            _ => Some((self.jf() * (self.dt + 2.0) - self.dt) / self.dt),
        }
    }

    /// Steps agent `i` spends mobile, for an edge entry.
    pub fn mobile_time(&self, i: u32) -> Option<f64> {
        if self.variant != LinearVariant::Edge || i == 0 {
            return None;
        }
        let (n, fi) = (self.nf(), f64::from(i));
        Some(if i == 1 {
            2.0
        } else if i <= self.n {
            fi
        } else {
            n * (self.dt + 2.0) - fi * self.dt
        })
    }

    /// Worst-case energy of agent `i` (1-based).
    pub fn agent_energy(&self, i: u32) -> f64 {
        let (n, dt, a) = (self.nf(), self.dt, self.alpha);
        let fi = f64::from(i);
        let span = n * (dt + 2.0);
        let mobile_to_end = span - fi * dt;
        match self.variant {
            LinearVariant::Edge => {
                if i <= self.n {
                    fi * (1.0 - a - a * dt) + a * span
                } else {
                    mobile_to_end
                }
            }
            LinearVariant::MidGreedy | LinearVariant::MidSldf => {
                let nj = self.left_branch_agents().unwrap_or(0.0);
                let greedy = self.variant == LinearVariant::MidGreedy;
                // The greedy order has one more settled agent on the left.
                let shift = if greedy { 1.0 } else { 0.0 };
                let settled_right =
                    |fi: f64| (fi - nj + 1.0) * (1.0 - a) + a * mobile_to_end;
                if i == 1 {
                    2.0 + a * (span - dt - 2.0)
                } else if greedy && i == 2 {
                    2.0 + a * (span - 2.0 * dt - 2.0)
                } else if greedy && i == 3 {
                    2.0 + a * (span - 3.0 * dt - 2.0)
                } else if fi <= self.jf() + shift {
                    fi * (1.0 - a - a * dt) - shift * (1.0 - a) + a * span
                } else if fi <= nj.floor() + shift {
                    mobile_to_end
                } else if fi <= (nj + n - self.jf()).floor() {
                    settled_right(fi)
                } else {
                    mobile_to_end
                }
            }
        }
    }

    /// Worst-case energy of every agent, indexed from agent 1.
    pub fn energy_profile(&self) -> Vec<f64> {
        let count = self.agent_count().floor().max(0.0) as u32;
        (1..=count).map(|i| self.agent_energy(i)).collect()
    }

    /// Closed-form worst-case total energy.
    pub fn total_energy(&self) -> f64 {
        let (n, j, dt, a) = (self.nf(), self.jf(), self.dt, self.alpha);
        match self.variant {
            LinearVariant::Edge => {
                a * n * (n - 1.0) * dt / 2.0
                    + 2.0 * n * n / dt
                    + n * (n - 1.0) / 2.0
                    + a * n * (3.0 * n - 1.0) / 2.0
                    + 1.0
            }
            LinearVariant::MidGreedy => {
                (1.0 - a + j - n - a * j + a * n / 2.0 + a * n * n / 2.0) * dt
                    + 2.0 * n * n / dt
                    + mid_constant(n, j, a)
                    - 3.0 * j
                    + 3.0 * a * j
            }
            LinearVariant::MidSldf => {
                (j - n - a * j + a * n / 2.0 + a * n * n / 2.0) * dt + 2.0 * n * n / dt
                    + mid_constant(n, j, a)
                    - j
                    + a * j
            }
        }
    }

    /// Largest single-agent energy, with the settled and mobile maxima for an
    /// edge entry.
    pub fn edge_energy_maxima(&self) -> Option<(f64, f64)> {
        if self.variant != LinearVariant::Edge {
            return None;
        }
        let n = self.nf();
        Some((n * (1.0 + self.alpha), 2.0 * n - self.dt))
    }

    /// Interval at which the last settled and first superfluous agents of an
    /// edge entry consume the same energy.
    pub fn equalizing_interval(&self) -> Option<f64> {
        (self.variant == LinearVariant::Edge && self.alpha > 0.0)
            .then(|| (1.0 - self.alpha) / self.alpha)
    }

    /// Interval minimizing the closed-form total energy.
    pub fn optimal_interval(&self) -> Result<f64, NoOptimum> {
        let (n, j, a) = (self.nf(), self.jf(), self.alpha);
        if a == 0.0 {
            return Err(NoOptimum::ZeroPowerRatio);
        }
        let denom = match self.variant {
            LinearVariant::Edge => return Ok((4.0 * n / (a * (n - 1.0))).sqrt()),
            LinearVariant::MidGreedy => {
                2.0 * (j - n) - 2.0 * j * a - 2.0 * a + a * n + a * n * n + 2.0
            }
            LinearVariant::MidSldf => 2.0 * (j - n) - 2.0 * j * a + a * n + a * n * n,
        };
        if denom > 0.0 {
            Ok(2.0 * n / denom.sqrt())
        } else {
            Err(NoOptimum::NonPositiveDenominator(denom))
        }
    }

    /// The published existence condition for an interior optimum, a
    /// simplified form of the denominator sign that drops the `αj` terms.
    pub fn optimum_condition(&self) -> Option<bool> {
        let (n, j, a) = (self.nf(), self.jf(), self.alpha);
        let lhs = n * (2.0 - a * n) / 2.0;
        match self.variant {
            LinearVariant::Edge => None,
            LinearVariant::MidGreedy => Some(lhs - 1.0 < j),
            LinearVariant::MidSldf => Some(lhs < j),
        }
    }
}

/// Constant terms shared by both interior-entry totals.
fn mid_constant(n: f64, j: f64, a: f64) -> f64 {
    -a + n / 2.0 - 3.0 * a * n / 2.0 + j * n + a * j * j + 3.0 * a * n * n / 2.0 - j * j
        + n * n / 2.0
        - a * j * n
        + 1.0
}

/// Energy-minimizing interval for an edge entry on a long line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeOptimum {
    pub interval: f64,
    /// Large-`n` limit `2/√α`.
    pub approx: f64,
    pub total_energy: f64,
    /// `n²(1/2 + 2√α + 3α/2)`, which bounds `total_energy`.
    pub energy_bound: f64,
}

pub fn linear_dt_opt(n: u32, alpha: f64) -> Result<Option<EdgeOptimum>, BoundsError> {
    if n < 2 {
        return Err(BoundsError::TooFewCells { n, min: 2 });
    }
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(None);
    }
    let nf = f64::from(n);
    let interval = (4.0 * nf / (alpha * (nf - 1.0))).sqrt();
    let case = LinearCase {
        n,
        j: 1,
        dt: interval,
        alpha,
        variant: LinearVariant::Edge,
    };
    Ok(Some(EdgeOptimum {
        interval,
        approx: 2.0 / alpha.sqrt(),
        total_energy: case.total_energy(),
        energy_bound: nf * nf * (0.5 + 2.0 * alpha.sqrt() + 1.5 * alpha),
    }))
}
