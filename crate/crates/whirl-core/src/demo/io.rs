//! Line-oriented text serialization for demonstrations.
//!
//! The detection file has one frame per line:
//!
//! ```text
//! t hx hy hz bu0 bv0 bu1 bv1 yaw pitch roll contact depth
//! ```
//!
//! with `contact` one of `none|portable|fixed|self_contact`. A sidecar
//! env-truth file carries the ground-truth environment per frame:
//!
//! ```text
//! t j0 j1 ... | ox oy oz oyaw opitch oroll | ...
//! ```
//!
//! Lines starting with `#` are headers. Floats print in shortest round-trip
//! form, so write/read is lossless and byte-stable.

use crate::demo::{ContactClass, DemoError, DemoVideo, HandFrame};
use crate::math::{Pose, Vec3};
use crate::sim::EnvSnapshot;
use std::fmt::Write as _;

fn contact_tag(c: ContactClass) -> &'static str {
    match c {
        ContactClass::None => "none",
        ContactClass::Portable => "portable",
        ContactClass::Fixed => "fixed",
        ContactClass::SelfContact => "self_contact",
    }
}

fn parse_contact(tag: &str) -> Result<ContactClass, DemoError> {
    match tag {
        "none" => Ok(ContactClass::None),
        "portable" => Ok(ContactClass::Portable),
        "fixed" => Ok(ContactClass::Fixed),
        "self_contact" => Ok(ContactClass::SelfContact),
        other => Err(DemoError::Parse(format!("unknown contact class {other:?}"))),
    }
}

/// Render the detection records.
pub fn frames_to_text(demo: &DemoVideo) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# demo {} frames {}", demo.scene_ref, demo.frames.len());
    let _ = writeln!(out, "# t hx hy hz bu0 bv0 bu1 bv1 yaw pitch roll contact depth");
    for (t, f) in demo.frames.iter().enumerate() {
        let _ = writeln!(
            out,
            "{t} {} {} {} {} {} {} {} {} {} {} {} {}",
            f.hand.x,
            f.hand.y,
            f.hand.z,
            f.bbox[0],
            f.bbox[1],
            f.bbox[2],
            f.bbox[3],
            f.wrist.x,
            f.wrist.y,
            f.wrist.z,
            contact_tag(f.contact),
            f.depth
        );
    }
    out
}

/// Render the env-truth sidecar records.
pub fn env_truth_to_text(demo: &DemoVideo) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# env_truth {} frames {}", demo.scene_ref, demo.env_truth.len());
    for (t, snap) in demo.env_truth.iter().enumerate() {
        let _ = write!(out, "{t}");
        for q in &snap.joint_values {
            let _ = write!(out, " {q}");
        }
        for p in &snap.object_poses {
            let _ = write!(
                out,
                " | {} {} {} {} {} {}",
                p.position.x, p.position.y, p.position.z, p.ypr.x, p.ypr.y, p.ypr.z
            );
        }
        let _ = writeln!(out);
    }
    out
}

fn parse_f64(tok: &str) -> Result<f64, DemoError> {
    tok.parse::<f64>()
        .map_err(|e| DemoError::Parse(format!("bad float {tok:?}: {e}")))
}

/// Parse the detection records produced by [`frames_to_text`].
pub fn frames_from_text(text: &str) -> Result<(String, Vec<HandFrame>), DemoError> {
    let mut scene_ref = String::new();
    let mut frames = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# demo ") {
            scene_ref = rest.split_whitespace().next().unwrap_or("").to_string();
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 13 {
            return Err(DemoError::Parse(format!("expected 13 fields, got {}", tok.len())));
        }
        frames.push(HandFrame {
            hand: Vec3::new(parse_f64(tok[1])?, parse_f64(tok[2])?, parse_f64(tok[3])?),
            bbox: [
                parse_f64(tok[4])?,
                parse_f64(tok[5])?,
                parse_f64(tok[6])?,
                parse_f64(tok[7])?,
            ],
            wrist: Vec3::new(parse_f64(tok[8])?, parse_f64(tok[9])?, parse_f64(tok[10])?),
            contact: parse_contact(tok[11])?,
            depth: parse_f64(tok[12])?,
        });
    }
    Ok((scene_ref, frames))
}

/// Parse the env-truth sidecar produced by [`env_truth_to_text`].
pub fn env_truth_from_text(text: &str) -> Result<Vec<EnvSnapshot>, DemoError> {
    let mut out = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('|');
        let head: Vec<&str> = parts.next().unwrap_or("").split_whitespace().collect();
        if head.is_empty() {
            return Err(DemoError::Parse("missing frame index".into()));
        }
        let joint_values = head[1..]
            .iter()
            .map(|t| parse_f64(t))
            .collect::<Result<Vec<_>, _>>()?;
        let mut object_poses = Vec::new();
        for obj in parts {
            let tok: Vec<&str> = obj.split_whitespace().collect();
            if tok.len() != 6 {
                return Err(DemoError::Parse(format!("expected 6 pose fields, got {}", tok.len())));
            }
            object_poses.push(Pose::new(
                Vec3::new(parse_f64(tok[0])?, parse_f64(tok[1])?, parse_f64(tok[2])?),
                Vec3::new(parse_f64(tok[3])?, parse_f64(tok[4])?, parse_f64(tok[5])?),
            ));
        }
        out.push(EnvSnapshot { joint_values, object_poses });
    }
    Ok(out)
}

/// Write `<stem>.demo` and `<stem>.envtruth` next to each other.
pub fn write_demo(demo: &DemoVideo, stem: &std::path::Path) -> Result<(), DemoError> {
    std::fs::write(stem.with_extension("demo"), frames_to_text(demo))?;
    std::fs::write(stem.with_extension("envtruth"), env_truth_to_text(demo))?;
    Ok(())
}

/// Read a demo written by [`write_demo`].
pub fn read_demo(stem: &std::path::Path) -> Result<DemoVideo, DemoError> {
    let frames_text = std::fs::read_to_string(stem.with_extension("demo"))?;
    let truth_text = std::fs::read_to_string(stem.with_extension("envtruth"))?;
    let (scene_ref, frames) = frames_from_text(&frames_text)?;
    let env_truth = env_truth_from_text(&truth_text)?;
    let demo = DemoVideo { scene_ref, frames, env_truth };
    demo.validate()?;
    Ok(demo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::scripted_expert;
    use crate::sim::testutil::drawer_scene;

    #[test]
    fn text_roundtrip_is_lossless() {
        let (demo, _) = scripted_expert(&drawer_scene(), 0).unwrap();
        let (scene_ref, frames) = frames_from_text(&frames_to_text(&demo)).unwrap();
        let truth = env_truth_from_text(&env_truth_to_text(&demo)).unwrap();
        let back = DemoVideo { scene_ref, frames, env_truth: truth };
        assert_eq!(demo, back);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let (demo, _) = scripted_expert(&drawer_scene(), 2).unwrap();
        let stem = dir.path().join("drawer_seed2");
        write_demo(&demo, &stem).unwrap();
        let back = read_demo(&stem).unwrap();
        assert_eq!(demo, back);
    }
}
