//! Train/test splits that are disjoint in species, pose, camera setting and scenery.

use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use super::record::{SampleRecord, SplitTag};
use crate::error::{Error, Result, SplitAxis};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    /// A sample is a test sample exactly when its family is listed here.
    pub holdout_families: Vec<String>,
    /// When set, test poses must come from this list and train poses must not.
    pub test_pose_indices: Option<Vec<usize>>,
    pub test_camera_settings: Option<Vec<String>>,
    pub test_sceneries: Option<Vec<String>>,
    /// Minimum number of test samples.
    pub test_size: usize,
}

fn check_axis<T, F>(axis: SplitAxis, train: &[SampleRecord], test: &[SampleRecord], explicit: Option<&[T]>, key: F) -> Result<()>
where
    T: Eq + Hash + std::fmt::Debug,
    F: Fn(&SampleRecord) -> &T,
{
    let test_keys: HashSet<&T> = test.iter().map(&key).collect();
    if let Some(r) = train.iter().find(|r| test_keys.contains(key(r))) {
        return Err(Error::Split {
            axis,
            detail: format!("{:?} appears in train sample {} and in the test set", key(r), r.sample_id),
        });
    }
    if let Some(list) = explicit {
        let allowed: HashSet<&T> = list.iter().collect();
        if let Some(r) = test.iter().find(|r| !allowed.contains(key(r))) {
            return Err(Error::Split {
                axis,
                detail: format!("test sample {} uses non-test value {:?}", r.sample_id, key(r)),
            });
        }
        if let Some(r) = train.iter().find(|r| allowed.contains(key(r))) {
            return Err(Error::Split {
                axis,
                detail: format!("train sample {} uses test-only value {:?}", r.sample_id, key(r)),
            });
        }
    }
    Ok(())
}

/// Partitions `manifest` and verifies disjointness on every axis.
pub fn build_split(manifest: &Manifest, spec: &SplitSpec) -> Result<(Manifest, Manifest)> {
    manifest.verify(None)?;
    let holdout: HashSet<&str> = spec.holdout_families.iter().map(String::as_str).collect();
    let (mut test, mut train): (Vec<SampleRecord>, Vec<SampleRecord>) = manifest
        .records
        .iter()
        .cloned()
        .partition(|r| holdout.contains(r.family.as_str()));
    if test.len() < spec.test_size {
        return Err(Error::Split {
            axis: SplitAxis::Size,
            detail: format!("only {} test samples, {} requested", test.len(), spec.test_size),
        });
    }
    check_axis(SplitAxis::Species, &train, &test, None::<&[String]>, |r| &r.taxon)?;
    check_axis(SplitAxis::Pose, &train, &test, spec.test_pose_indices.as_deref(), |r| &r.pose_index)?;
    check_axis(
        SplitAxis::CameraSetting,
        &train,
        &test,
        spec.test_camera_settings.as_deref(),
        |r| &r.camera_setting,
    )?;
    check_axis(SplitAxis::Scenery, &train, &test, spec.test_sceneries.as_deref(), |r| &r.scenery)?;
    for r in &mut train {
        r.split = Some(SplitTag::Train);
    }
    for r in &mut test {
        r.split = Some(SplitTag::Test);
    }
    let make = |records| Manifest { header: manifest.header.clone(), records };
    Ok((make(train), make(test)))
}
