//! Named results with uncertainties and the route that produced them.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
    Lattice,
    Resolvent,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
            Method::Lattice => "lattice",
            Method::Resolvent => "resolvent",
        }
    }
}

/// How `uncertainty` should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Uncertainty {
    Stderr,
    Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub value: f64,
    pub uncertainty: f64,
    pub uncertainty_kind: Uncertainty,
    pub method: Method,
    /// Power of λ the (λ-stripped) value multiplies; 0 for λ-dependent values.
    pub lambda_power: u32,
    /// Which theoretical quantity the row evaluates.
    pub anchor: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub version: u32,
    pub entries: Vec<Entry>,
}

impl ConstantsReport {
    pub fn new() -> Self {
        ConstantsReport {
            version: 1,
            entries: Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        name: impl Into<String>,
        value: f64,
        uncertainty: f64,
        kind: Uncertainty,
        method: Method,
        lambda_power: u32,
        anchor: impl Into<String>,
    ) {
        self.entries.push(Entry {
            name: name.into(),
            value,
            uncertainty,
            uncertainty_kind: kind,
            method,
            lambda_power,
            anchor: anchor.into(),
        });
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Fixed-width table, one row per entry.
    pub fn to_table(&self) -> String {
        let w = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(4).max(4);
        let mut s = format!(
            "{:<w$}  {:>14}  {:>11}  {:<9}  {:<11}  {:>3}  {}\n",
            "name", "value", "uncertainty", "kind", "method", "λ^", "anchor"
        );
        for e in &self.entries {
            let kind = match e.uncertainty_kind {
                Uncertainty::Stderr => "stderr",
                Uncertainty::Tolerance => "tolerance",
            };
            s.push_str(&format!(
                "{:<w$}  {:>14.8e}  {:>11.3e}  {:<9}  {:<11}  {:>3}  {}\n",
                e.name,
                e.value,
                e.uncertainty,
                kind,
                e.method.as_str(),
                e.lambda_power,
                e.anchor
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let mut r = ConstantsReport::new();
        r.push("f1", 7.0 / (30.0 * std::f64::consts::PI), 0.0, Uncertainty::Tolerance, Method::ClosedForm, 2, "first expansion coefficient");
        r.push("x", 0.1 + 0.2, 1e-17, Uncertainty::Stderr, Method::MonteCarlo, 4, "y");
        let back = ConstantsReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"method\": \"monte-carlo\""));
        assert_eq!(r.to_table().lines().count(), 3);
    }
}
