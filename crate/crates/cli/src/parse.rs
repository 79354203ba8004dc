use std::f64::consts::PI;
use std::str::FromStr;

use qgate_core::{PhaseTarget, Subsystem};

/// Reads an angle or area given either as a plain number of radians or as a
/// multiple of π: `12pi`, `0.05pi`, `pi`, `-3π`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let stripped = t
        .strip_suffix("pi")
        .or_else(|| t.strip_suffix('π'))
        .map(|c| c.trim_end_matches('*').trim());
    let value = match stripped {
        Some("") => PI,
        Some("-") => -PI,
        Some(c) => c.parse::<f64>().map(|c| c * PI).map_err(|e| format!("'{s}': {e}"))?,
        None => t.parse::<f64>().map_err(|e| format!("'{s}': {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

pub fn parse_phase_target(s: &str) -> Result<PhaseTarget, String> {
    match s {
        "any" => Ok(PhaseTarget::AnyLocalPhase),
        "all-negative" => Ok(PhaseTarget::AllNegative),
        _ => Err(format!("unknown phase target '{s}' (expected any or all-negative)")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Report {
    SuccessRate,
    AreaTotal,
    AreaCumulative,
    AreaJoint(usize, usize),
    CosBeta(usize, usize),
    MSquare(Subsystem),
    MCube,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or_else(|| format!("expected a pair 'i,j', got '{s}'"))?;
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}"));
    Ok((num(i)?, num(j)?))
}

impl FromStr for Report {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("success-rate", None) => Ok(Report::SuccessRate),
            ("area-total", None) => Ok(Report::AreaTotal),
            ("area-cumulative", None) => Ok(Report::AreaCumulative),
            ("mcube", None) => Ok(Report::MCube),
            ("area-joint", Some(p)) => parse_pair(p).map(|(i, j)| Report::AreaJoint(i, j)),
            ("cos-beta", Some(p)) => parse_pair(p).map(|(i, j)| Report::CosBeta(i, j)),
            ("msquare", Some(sub)) => sub
                .parse::<Subsystem>()
                .map(Report::MSquare)
                .map_err(|e| e.to_string()),
            _ => Err(format!(
                "unknown report '{s}' (expected success-rate, area-total, area-cumulative, \
                 area-joint:i,j, cos-beta:i,j, msquare:V|A|B or mcube)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("12pi").unwrap(), 12.0 * PI);
        assert_eq!(parse_angle("0.05pi").unwrap(), 0.05 * PI);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-2π").unwrap(), -2.0 * PI);
        assert_eq!(parse_angle("3*pi").unwrap(), 3.0 * PI);
        assert_eq!(parse_angle("1.5").unwrap(), 1.5);
        assert!(parse_angle("twelve").is_err());
        assert!(parse_angle("inf").is_err());
    }

    #[test]
    fn reports() {
        assert_eq!("area-joint:1,2".parse::<Report>().unwrap(), Report::AreaJoint(1, 2));
        assert_eq!("cos-beta:1,3".parse::<Report>().unwrap(), Report::CosBeta(1, 3));
        assert_eq!("msquare:V".parse::<Report>().unwrap(), Report::MSquare(Subsystem::V));
        assert_eq!("mcube".parse::<Report>().unwrap(), Report::MCube);
        for bad in ["histogram", "cos-beta", "cos-beta:1", "msquare:Q", "mcube:1"] {
            assert!(bad.parse::<Report>().is_err(), "{bad}");
        }
    }
}
