//! Kinetic-energy check of arm motion against per-body-region limits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyRegion {
    HeadFace,
    Hand,
    LowerArm,
    UpperArm,
    TorsoChest,
}

impl BodyRegion {
    pub const ALL: [BodyRegion; 5] = [
        BodyRegion::HeadFace,
        BodyRegion::Hand,
        BodyRegion::LowerArm,
        BodyRegion::UpperArm,
        BodyRegion::TorsoChest,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BodyRegion::HeadFace => "Head (Face)",
            BodyRegion::Hand => "Hand",
            BodyRegion::LowerArm => "Lower Arm",
            BodyRegion::UpperArm => "Upper Arm",
            BodyRegion::TorsoChest => "Torso (Chest)",
        }
    }
}

/// Energy limits in joules, in [`BodyRegion::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLimitTable {
    pub limits: Vec<(BodyRegion, f64)>,
}

impl Default for EnergyLimitTable {
    fn default() -> Self {
        Self {
            limits: vec![
                (BodyRegion::HeadFace, 0.11),
                (BodyRegion::Hand, 0.49),
                (BodyRegion::LowerArm, 1.30),
                (BodyRegion::UpperArm, 1.50),
                (BodyRegion::TorsoChest, 1.60),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyStatus {
    Safe,
    Unsafe,
}

impl fmt::Display for EnergyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnergyStatus::Safe => "Safe",
            EnergyStatus::Unsafe => "Unsafe",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub arm: String,
    pub region: BodyRegion,
    pub limit_j: f64,
    pub energy_j: f64,
    pub ratio: f64,
    pub status: EnergyStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub arms: Vec<(String, f64)>,
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    pub fn row(&self, arm: &str, region: BodyRegion) -> Option<&EnergyRow> {
        self.rows
            .iter()
            .find(|r| r.arm == arm && r.region == region)
    }

    /// One line per region, two columns (ratio, status) per arm.
    pub fn to_table(&self, limits: &EnergyLimitTable) -> String {
        let mut out = String::new();
        let mut header = format!("{:<14} {:>9}", "Body Region", "Limit [J]");
        for (arm, t) in &self.arms {
            header.push_str(&format!(" | {:>22}", format!("{arm} (T_r = {t} J)")));
        }
        out.push_str(&header);
        out.push('\n');
        out.push_str(&"-".repeat(header.chars().count()));
        out.push('\n');
        for (region, limit) in &limits.limits {
            out.push_str(&format!("{:<14} {:>9.2}", region.label(), limit));
            for (arm, _) in &self.arms {
                let r = self.row(arm, *region).expect("row for every arm/region");
                out.push_str(&format!(" | {:>13.2} {:>8}", r.ratio, r.status.to_string()));
            }
            out.push('\n');
        }
        out
    }
}

impl EnergyLimitTable {
    pub fn validate(&self) -> Result<()> {
        for (region, limit) in &self.limits {
            if !(*limit > 0.0 && limit.is_finite()) {
                return Err(Error::config(
                    format!("limits.{}", region.label()),
                    "must be > 0",
                ));
            }
        }
        Ok(())
    }
}

/// `ratio = T_r / limit`; a region is unsafe only when the ratio exceeds 1.
pub fn kinetic_report(arms: &[(String, f64)], limits: &EnergyLimitTable) -> Result<EnergyReport> {
    limits.validate()?;
    let mut rows = Vec::with_capacity(arms.len() * limits.limits.len());
    for (arm, energy) in arms {
        if !(*energy >= 0.0 && energy.is_finite()) {
            return Err(Error::config(
                format!("arms.{arm}"),
                format!("kinetic energy must be >= 0, got {energy}"),
            ));
        }
        for (region, limit) in &limits.limits {
            let ratio = energy / limit;
            rows.push(EnergyRow {
                arm: arm.clone(),
                region: *region,
                limit_j: *limit,
                energy_j: *energy,
                ratio,
                status: if ratio > 1.0 {
                    EnergyStatus::Unsafe
                } else {
                    EnergyStatus::Safe
                },
            });
        }
    }
    Ok(EnergyReport {
        arms: arms.to_vec(),
        rows,
    })
}
