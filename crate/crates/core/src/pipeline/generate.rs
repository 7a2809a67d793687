//! End-to-end sample generation.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::Config;
use crate::dataset::{
    sample_id, sample_key, sample_seed, Manifest, ManifestHeader, ManifestWriter, SampleFiles,
    SampleRecord, Seeds, SplitTag,
};
use crate::error::{Error, Result};
use crate::genclient::{ChatClient, ControlImage, ControlKind, GenerationRequest, ImageBackend};
use crate::model::container::load_asset;
use crate::model::{pose_mesh, BodyModelAsset};
use crate::pose_bank::{load_pose_bank, PoseBank};
use crate::prompt::{caption_orientation, synthesize_prompt, PromptParts, SceneLists};
use crate::render::imageio::{depth_control_image, encode_pfm, encode_png_gray, encode_png_rgb, write_file};
use crate::render::{canny_edges, rasterize, sample_camera, to_gray, MeshBounds};
use crate::shape::{load_priors, sample_embedding, PriorSet, ShapeDecoder, ShapeDecoderSpec};
use crate::taxonomy::{TaxonomyTree, DEFAULT_TAXONOMY};

const STREAM_TAXON: u64 = 1;
const STREAM_SHAPE: u64 = 2;
const STREAM_POSE: u64 = 3;
const STREAM_CAMERA: u64 = 4;
const STREAM_SCENE: u64 = 5;

/// Loaded assets and service clients for a generation run.
pub struct Generator {
    config: Config,
    asset: BodyModelAsset,
    taxonomy: TaxonomyTree,
    priors: PriorSet,
    decoder: ShapeDecoder,
    poses: PoseBank,
    lists: SceneLists,
    backend: Box<dyn ImageBackend>,
    chat: Box<dyn ChatClient>,
}

/// Outcome of [`Generator::generate`].
#[derive(Debug, Clone)]
pub struct GenerateReport {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub requested: u64,
    pub failures: Vec<(u64, String)>,
    pub failure_threshold: f64,
}

impl GenerateReport {
    pub fn failure_rate(&self) -> f64 {
        if self.requested == 0 {
            0.0
        } else {
            self.failures.len() as f64 / self.requested as f64
        }
    }

    pub fn run_failed(&self) -> bool {
        self.failure_rate() > self.failure_threshold
    }
}

/// Train/test partition of the pose bank and scene lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub test_poses: Vec<usize>,
    pub test_camera_settings: Vec<String>,
    pub test_sceneries: Vec<String>,
}

fn pick_test(n: usize, fraction: f64, seed: u64, label: &str) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::Config(format!("cannot partition {label}: need at least 2 entries, have {n}")));
    }
    let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n - 1);
    let key: [u8; 32] = Sha256::new()
        .chain_update(b"zoosynth-partition")
        .chain_update(label.as_bytes())
        .chain_update(seed.to_le_bytes())
        .finalize()
        .into();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::from_seed(key));
    let mut test = idx[..k].to_vec();
    test.sort_unstable();
    Ok(test)
}

/// Deterministic partition derived from the config's partition settings.
pub fn partition(config: &Config, n_poses: usize, lists: &SceneLists) -> Result<Partition> {
    let p = &config.partition;
    let pick_names = |list: &[String], frac, label| -> Result<Vec<String>> {
        Ok(pick_test(list.len(), frac, p.seed, label)?
            .into_iter()
            .map(|i| list[i].clone())
            .collect())
    };
    Ok(Partition {
        test_poses: pick_test(n_poses, p.test_pose_fraction, p.seed, "poses")?,
        test_camera_settings: pick_names(&lists.camera_settings, p.test_camera_fraction, "camera_settings")?,
        test_sceneries: pick_names(&lists.sceneries, p.test_scenery_fraction, "sceneries")?,
    })
}

pub fn load_scene_lists(config: &Config) -> Result<SceneLists> {
    let defaults = SceneLists::default();
    let read = |p: &Option<PathBuf>, fallback: Vec<String>| -> Result<Vec<String>> {
        match p {
            Some(path) => Ok(crate::prompt::parse_list(
                &std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
            )),
            None => Ok(fallback),
        }
    };
    let lists = SceneLists {
        camera_settings: read(&config.assets.camera_settings, defaults.camera_settings)?,
        sceneries: read(&config.assets.sceneries, defaults.sceneries)?,
    };
    lists.validate()?;
    Ok(lists)
}

fn startup<T>(what: &str, path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(format!("{what} {}: {other}", path.display())),
    })
}

struct Plan {
    mode: Option<SplitTag>,
    pose_pool: Vec<usize>,
    exclusive_poses: Option<Vec<usize>>,
    lists: SceneLists,
}

impl Generator {
    /// Loads every asset and builds service clients; any failure is a config error.
    pub fn from_config(config: Config) -> Result<Self> {
        let backend = config.backend.image_backend().map_err(|e| Error::Config(format!("backend: {e}")))?;
        let chat = config.chat.chat_client().map_err(|e| Error::Config(format!("chat: {e}")))?;
        Self::with_clients(config, backend, chat)
    }

    pub fn with_clients(config: Config, backend: Box<dyn ImageBackend>, chat: Box<dyn ChatClient>) -> Result<Self> {
        config.validate()?;
        let a = &config.assets;
        let asset = startup("body model", &a.body_model, load_asset(&a.body_model))?;
        let holdout: Vec<&str> = a.holdout_families.iter().map(String::as_str).collect();
        let taxonomy = match &a.taxonomy {
            Some(p) => {
                let text = startup("taxonomy", p, std::fs::read_to_string(p).map_err(|e| Error::io(p, e)))?;
                startup("taxonomy", p, TaxonomyTree::parse(&text, &holdout))?
            }
            None => TaxonomyTree::parse(DEFAULT_TAXONOMY, &holdout)?,
        };
        let priors = startup("priors", &a.priors, load_priors(&a.priors))?;
        if priors.priors.is_empty() {
            return Err(Error::Config(format!("priors file {} is empty", a.priors.display())));
        }
        let decoder_text = startup(
            "decoder",
            &a.decoder,
            std::fs::read_to_string(&a.decoder).map_err(|e| Error::io(&a.decoder, e)),
        )?;
        let decoder_spec: ShapeDecoderSpec = serde_json::from_str(&decoder_text)
            .map_err(|e| Error::Config(format!("decoder {}: {e}", a.decoder.display())))?;
        let decoder = startup("decoder", &a.decoder, ShapeDecoder::from_spec(&decoder_spec, asset.n_betas()))?;
        if let ShapeDecoder::Affine(d) = &decoder {
            if d.dim() != priors.dim {
                return Err(Error::Config(format!(
                    "decoder expects {}-d embeddings, priors are {}-d",
                    d.dim(),
                    priors.dim
                )));
            }
        }
        let poses = startup("pose bank", &a.pose_bank, load_pose_bank(&a.pose_bank, asset.n_joints()))?;
        let lists = load_scene_lists(&config)?;
        Ok(Self { config, asset, taxonomy, priors, decoder, poses, lists, backend, chat })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn asset(&self) -> &BodyModelAsset {
        &self.asset
    }

    pub fn pose_bank(&self) -> &PoseBank {
        &self.poses
    }

    pub fn scene_lists(&self) -> &SceneLists {
        &self.lists
    }

    pub fn partition(&self) -> Result<Partition> {
        partition(&self.config, self.poses.len(), &self.lists)
    }

    fn plan(&self, n: u64, master_seed: u64, mode: Option<SplitTag>) -> Result<Plan> {
        let Some(tag) = mode else {
            return Ok(Plan {
                mode,
                pose_pool: (0..self.poses.len()).collect(),
                exclusive_poses: None,
                lists: self.lists.clone(),
            });
        };
        let part = self.partition()?;
        let keep = |list: &[String], test: &[String]| -> Vec<String> {
            list.iter()
                .filter(|s| test.contains(s) == (tag == SplitTag::Test))
                .cloned()
                .collect()
        };
        let lists = SceneLists {
            camera_settings: keep(&self.lists.camera_settings, &part.test_camera_settings),
            sceneries: keep(&self.lists.sceneries, &part.test_sceneries),
        };
        let pose_pool: Vec<usize> = (0..self.poses.len())
            .filter(|i| part.test_poses.contains(i) == (tag == SplitTag::Test))
            .collect();
        let exclusive_poses = if tag == SplitTag::Test {
            let mut bank = self.poses.clone();
            bank.reset();
            bank.reserve((0..bank.len()).filter(|i| !part.test_poses.contains(i)))?;
            let mut key = sample_key(master_seed, u64::MAX);
            key[0] ^= 0x5a;
            let mut rng = ChaCha8Rng::from_seed(key);
            Some((0..n).map(|_| bank.sample_exclusive_index(&mut rng)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok(Plan { mode, pose_pool, exclusive_poses, lists })
    }

    /// Generates samples `0..n` into `out_dir`, skipping and logging failures.
    pub fn generate(&self, out_dir: &Path, n: u64, master_seed: u64, mode: Option<SplitTag>) -> Result<GenerateReport> {
        let plan = self.plan(n, master_seed, mode)?;
        let config_value = serde_json::to_value(&self.config)?;
        let mut header = ManifestHeader::new(master_seed, config_value);
        if let Some(tag) = mode {
            header.module_versions.insert("split_mode".into(), tag.to_string());
        }
        let writer = ManifestWriter::create(out_dir, header)?;
        let workers = match self.config.generation.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            w => w,
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        let results: Vec<(u64, Result<()>)> = pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let r = self
                        .generate_one(&plan, out_dir, master_seed, i)
                        .and_then(|rec| writer.write_sample(rec).map(|_| ()));
                    (i, r)
                })
                .collect()
        });
        let mut failures = Vec::new();
        for (i, r) in results {
            if let Err(e) = r {
                log::error!("sample {i} failed: {e}");
                let dir = out_dir.join("samples").join(sample_id(master_seed, i));
                let _ = std::fs::remove_dir_all(dir);
                failures.push((i, e.to_string()));
            }
        }
        let manifest_path = writer.path().to_path_buf();
        let manifest = writer.finalize()?;
        let report = GenerateReport {
            manifest,
            manifest_path,
            requested: n,
            failures,
            failure_threshold: self.config.generation.failure_threshold,
        };
        if report.run_failed() {
            log::error!(
                "{} of {n} samples failed ({:.1}%), above the {:.1}% threshold",
                report.failures.len(),
                100.0 * report.failure_rate(),
                100.0 * report.failure_threshold
            );
        }
        Ok(report)
    }

    fn generate_one(&self, plan: &Plan, root: &Path, master_seed: u64, index: u64) -> Result<SampleRecord> {
        let cfg = &self.config;
        let id = sample_id(master_seed, index);
        let seed = sample_seed(master_seed, index);
        let key = sample_key(master_seed, index);
        let stream = |s: u64| {
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream(s);
            rng
        };

        let mut rng = stream(STREAM_TAXON);
        let taxon = match plan.mode {
            Some(SplitTag::Test) => self.taxonomy.sample_holdout(&mut rng)?,
            Some(SplitTag::Train) => self.taxonomy.sample_taxon(&mut rng, false)?,
            None => self.taxonomy.sample_taxon(&mut rng, true)?,
        }
        .clone();

        let prior = self.priors.get(&taxon.name).ok_or_else(|| {
            Error::NotFound(format!("no shape prior for '{}' and no default prior", taxon.name))
        })?;
        let embedding = sample_embedding(prior, &mut stream(STREAM_SHAPE));
        let shape = self.decoder.decode_shape(&taxon.name, &embedding)?;

        let pose_index = match &plan.exclusive_poses {
            Some(drawn) => drawn[index as usize],
            None => {
                if plan.pose_pool.is_empty() {
                    return Err(Error::UnsatisfiableSampling("pose pool is empty".into()));
                }
                let mut r = stream(STREAM_POSE);
                plan.pose_pool[rand::Rng::random_range(&mut r, 0..plan.pose_pool.len())]
            }
        };
        let pose = self.poses.pose(pose_index).expect("pose index in range").clone();
        let posed = pose_mesh(&self.asset, &shape, &pose)?;

        let bounds = MeshBounds::from_points(&posed.vertices)?;
        let camera = sample_camera(&mut stream(STREAM_CAMERA), &bounds, &cfg.camera)?;
        let (camera_setting, scenery) = plan.lists.sample(&mut stream(STREAM_SCENE))?;

        let render = rasterize(self.asset.faces(), &posed.vertices, &camera, &cfg.shading);
        let shaded_png = encode_png_rgb(&render.shaded)?;
        let depth_png = encode_png_gray(&depth_control_image(&render.depth))?;
        let edges = canny_edges(&to_gray(&render.shaded), &cfg.canny)?;
        let canny_png = encode_png_gray(&edges.to_image())?;

        let mut downgrades = Vec::new();
        let caption = if cfg.ablations.no_caption {
            None
        } else {
            match caption_orientation(&shaded_png, self.chat.as_ref(), Some(seed.to_string())) {
                Ok(c) => Some(c),
                Err(e) => {
                    log::warn!("sample {id}: captioning failed, continuing without caption: {e}");
                    downgrades.push(format!("caption: {e}"));
                    None
                }
            }
        };
        let parts = PromptParts {
            species: taxon.name.clone(),
            caption: caption.clone(),
            camera_setting: camera_setting.clone(),
            scenery: scenery.clone(),
            seed,
        };
        let llm = (!cfg.ablations.no_llm).then_some(self.chat.as_ref());
        let prompt = synthesize_prompt(&parts, llm, cfg.generation.max_prompt_chars)?;

        let (depth_strength, canny_strength) = cfg.control_strengths();
        let mut controls = Vec::new();
        if let Some(strength) = depth_strength {
            controls.push(ControlImage { kind: ControlKind::Depth, image: depth_png.clone(), strength });
        }
        if let Some(strength) = canny_strength {
            controls.push(ControlImage { kind: ControlKind::Canny, image: canny_png.clone(), strength });
        }
        let request = GenerationRequest {
            prompt: prompt.text.clone(),
            seed,
            width: camera.image_size,
            height: camera.image_size,
            controls,
        };
        let generated = self.backend.generate(&request)?;

        let files = SampleFiles::for_sample(&id);
        let dir = root.join("samples").join(&id);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_file(&root.join(&files.shaded), &shaded_png)?;
        write_file(&root.join(&files.depth_control), &depth_png)?;
        write_file(&root.join(&files.canny), &canny_png)?;
        write_file(&root.join(&files.depth), &encode_pfm(&render.depth))?;
        write_file(&root.join(&files.image), &generated.png)?;

        Ok(SampleRecord {
            sample_index: index,
            sample_id: id,
            taxon: taxon.name.clone(),
            rank: taxon.rank,
            family: taxon.family().unwrap_or_default().to_string(),
            betas: shape.betas,
            pose,
            pose_index,
            camera,
            prompt: prompt.text,
            construction: prompt.construction,
            caption,
            camera_setting,
            scenery,
            seeds: Seeds { master: master_seed, sample: seed },
            files,
            model_id: generated.model_id,
            split: plan.mode,
            downgrades,
        })
    }
}
