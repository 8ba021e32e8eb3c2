//! `key = value` description of a synthetic scene for the simulate command.
//! Every key has a default; unknown keys are errors. Blank lines and lines
//! starting with `#` are ignored.
//!
//! ```text
//! image_width = 640
//! image_height = 480
//! frames = 50
//! objects = 2,3,4
//! size_range_0 = 18,30
//! size_range_1 = 24,40
//! size_range_2 = 30,48
//! v_avg = 12
//! v_max = 15
//! motion_axis = +y
//! miss_prob = 0.1
//! fp_rate = 0.2
//! center_noise_sigma = 1.5
//! separation = 4            # or: none
//! occlusion = 2:2:1:5:7     # class:small_id:large_id:first_frame:last_frame
//! seed = 1
//! ```

use rowtrack::formats::ClassId;
use rowtrack::simulator::{OcclusionSpec, SceneConfig};
use rowtrack::trackers::MotionAxis;

fn parse_pair(value: &str) -> Option<(f64, f64)> {
    let mut it = value.split(',').map(str::trim);
    let lo = it.next()?.parse().ok()?;
    let hi = it.next()?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((lo, hi))
}

fn parse_occlusion(value: &str) -> Option<OcclusionSpec> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() != 5 {
        return None;
    }
    Some(OcclusionSpec {
        class_id: ClassId::from_u8(parts[0].parse().ok()?)?,
        small_id: parts[1].parse().ok()?,
        large_id: parts[2].parse().ok()?,
        frame_start: parts[3].parse().ok()?,
        frame_end: parts[4].parse().ok()?,
    })
}

pub fn parse_scene_config(text: &str) -> Result<SceneConfig, String> {
    let mut cfg = SceneConfig::default();
    cfg.occlusions.clear();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(format!("line {line}: expected key = value"));
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = || format!("line {line}: invalid value for {key}: {value:?}");
        match key {
            "image_width" => cfg.image_width = value.parse().map_err(|_| bad())?,
            "image_height" => cfg.image_height = value.parse().map_err(|_| bad())?,
            "frames" => cfg.frames = value.parse().map_err(|_| bad())?,
            "objects" => {
                let parts: Vec<u32> =
                    value.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
                cfg.objects = <[u32; 3]>::try_from(parts).map_err(|_| bad())?;
            }
            "size_range_0" => cfg.size_ranges[0] = parse_pair(value).ok_or_else(bad)?,
            "size_range_1" => cfg.size_ranges[1] = parse_pair(value).ok_or_else(bad)?,
            "size_range_2" => cfg.size_ranges[2] = parse_pair(value).ok_or_else(bad)?,
            "v_avg" => cfg.v_avg = value.parse().map_err(|_| bad())?,
            "v_max" => cfg.v_max = value.parse().map_err(|_| bad())?,
            "motion_axis" => cfg.motion_axis = value.parse::<MotionAxis>().map_err(|_| bad())?,
            "miss_prob" => cfg.miss_prob = value.parse().map_err(|_| bad())?,
            "fp_rate" => cfg.fp_rate = value.parse().map_err(|_| bad())?,
            "center_noise_sigma" => cfg.center_noise_sigma = value.parse().map_err(|_| bad())?,
            "separation" => {
                cfg.separation =
                    if value == "none" { None } else { Some(value.parse().map_err(|_| bad())?) }
            }
            "occlusion" => cfg.occlusions.push(parse_occlusion(value).ok_or_else(bad)?),
            "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
            other => return Err(format!("line {line}: unknown key {other:?}")),
        }
    }
    Ok(cfg)
}

/// The config as `key = value` lines, parseable by `parse_scene_config`.
pub fn scene_config_text(cfg: &SceneConfig) -> String {
    let mut out = format!(
        "image_width = {}\nimage_height = {}\nframes = {}\nobjects = {},{},{}\n\
         size_range_0 = {},{}\nsize_range_1 = {},{}\nsize_range_2 = {},{}\n\
         v_avg = {}\nv_max = {}\nmotion_axis = {}\nmiss_prob = {}\nfp_rate = {}\n\
         center_noise_sigma = {}\nseparation = {}\n",
        cfg.image_width,
        cfg.image_height,
        cfg.frames,
        cfg.objects[0],
        cfg.objects[1],
        cfg.objects[2],
        cfg.size_ranges[0].0,
        cfg.size_ranges[0].1,
        cfg.size_ranges[1].0,
        cfg.size_ranges[1].1,
        cfg.size_ranges[2].0,
        cfg.size_ranges[2].1,
        cfg.v_avg,
        cfg.v_max,
        cfg.motion_axis,
        cfg.miss_prob,
        cfg.fp_rate,
        cfg.center_noise_sigma,
        cfg.separation.map(|s| s.to_string()).unwrap_or_else(|| "none".into()),
    );
    for o in &cfg.occlusions {
        out.push_str(&format!(
            "occlusion = {}:{}:{}:{}:{}\n",
            o.class_id.as_u8(),
            o.small_id,
            o.large_id,
            o.frame_start,
            o.frame_end
        ));
    }
    out.push_str(&format!("seed = {}\n", cfg.seed));
    out
}
