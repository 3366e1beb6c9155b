use crate::abmil::TrainConfig;

/// A named final configuration for one feature extractor or preprocessing
/// variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub extractor: &'static str,
    pub learning_rate: f64,
    pub lr_decay_patience: usize,
    pub lr_decay_factor: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub max_patches: usize,
    pub model_size: (usize, usize),
}

impl Preset {
    /// Applies the preset's ten hyperparameters on top of `base`.
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            lr_decay_patience: self.lr_decay_patience,
            lr_decay_factor: self.lr_decay_factor,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            dropout: self.dropout,
            weight_decay: self.weight_decay,
            max_patches: self.max_patches,
            model_size: self.model_size,
            ..base.clone()
        }
    }

    pub fn config(&self) -> TrainConfig {
        self.apply(&TrainConfig::default())
    }
}

macro_rules! presets {
    ($($name:literal, $ext:literal: $lr:expr, $pat:expr, $fac:expr, $b1:expr, $b2:expr, $eps:expr, $drop:expr, $wd:expr, $mp:expr, [$m1:expr, $m2:expr];)*) => {
        pub const PRESETS: &[Preset] = &[$(Preset {
            name: $name,
            extractor: $ext,
            learning_rate: $lr,
            lr_decay_patience: $pat,
            lr_decay_factor: $fac,
            beta1: $b1,
            beta2: $b2,
            epsilon: $eps,
            dropout: $drop,
            weight_decay: $wd,
            max_patches: $mp,
            model_size: ($m1, $m2),
        }),*];
    };
}

presets! {
    "rn50", "ResNet50": 2e-3, 20, 0.75, 0.75, 0.95, 1e-2, 0.4, 1e-3, 800, [512, 128];
    "rn18", "ResNet18": 1e-4, 20, 0.9, 0.8, 0.99, 1e-4, 0.5, 1e-5, 700, [1024, 256];
    "vit-l", "ViT-L": 5e-5, 10, 0.35, 0.85, 0.999, 1e-3, 0.0, 1e-1, 800, [512, 384];
    "rn18-histo", "RN18-Histo": 2e-4, 20, 0.9, 0.9, 0.99, 1e-4, 0.6, 1e-4, 1000, [512, 512];
    "lunit", "Lunit": 1e-4, 10, 0.75, 0.99, 0.9999, 1e-5, 0.6, 1e-1, 900, [1024, 512];
    "rn50-histo", "RN50-Histo": 2e-4, 25, 0.75, 0.8, 0.99, 1e-4, 0.6, 1e-3, 700, [512, 384];
    "ctranspath", "CTransPath": 1e-4, 25, 0.9, 0.7, 0.99999, 1e-3, 0.4, 1e-3, 1000, [256, 128];
    "hibou-b", "Hibou-B": 4e-5, 10, 0.9, 0.99, 0.9999, 1e-3, 0.3, 1e-2, 1600, [256, 128];
    "phikon", "Phikon": 5e-5, 25, 0.75, 0.99, 0.999, 1e-5, 0.8, 1e-5, 1200, [512, 256];
    "kaiko-b8", "Kaiko-B8": 2e-5, 10, 0.75, 0.95, 0.9999, 1e-5, 0.2, 1e-1, 600, [512, 128];
    "gpfm", "GPFM": 1e-4, 25, 0.9, 0.95, 0.99, 1e-4, 0.8, 1e-6, 1000, [512, 128];
    "uni", "UNI": 1e-5, 10, 0.75, 0.9, 0.999, 1e-5, 0.0, 1e-3, 1000, [512, 256];
    "hibou-l", "Hibou-L": 5e-5, 25, 0.75, 0.75, 0.99999, 1e-4, 0.6, 1e-7, 400, [256, 128];
    "virchow", "Virchow": 2e-4, 20, 0.9, 0.95, 0.99, 1e-3, 0.8, 1e-2, 1100, [512, 256];
    "virchow2-cls", "Virchow2-CLS": 2e-5, 10, 0.75, 0.55, 0.999, 1e-4, 0.6, 1e-4, 1000, [512, 256];
    "h-optimus-0", "H-optimus-0": 2.5e-5, 5, 0.75, 0.5, 0.9999, 1e-4, 0.4, 1e-2, 1000, [128, 32];
    "prov-gigapath", "Prov-GigaPath": 5e-5, 15, 0.75, 0.7, 0.99, 1e-4, 0.7, 1e-4, 1300, [512, 256];
    "rn50-reinhard", "RN50 Reinhard": 2e-3, 25, 0.75, 0.75, 0.95, 1e-2, 0.4, 1e-3, 400, [512, 256];
    "rn50-macenko", "RN50 Macenko": 2e-3, 15, 0.75, 0.85, 0.95, 1e-2, 0.3, 1e-3, 400, [512, 128];
    "rn50-otsu", "RN50 Otsu": 2e-3, 15, 0.9, 0.75, 0.95, 1e-2, 0.1, 1e-3, 600, [512, 256];
    "rn50-otsu-macenko", "RN50 Otsu+Macenko": 2e-3, 25, 0.9, 0.75, 0.99, 1e-3, 0.3, 1e-4, 1000, [512, 256];
    "rn50-5augs", "RN50 5Augs": 1e-3, 25, 0.6, 0.8, 0.99, 1e-4, 0.4, 1e-4, 700, [128, 32];
    "rn50-10augs", "RN50 10Augs": 2e-3, 20, 0.75, 0.8, 0.99, 1e-2, 0.4, 1e-3, 700, [512, 256];
    "rn50-20augs", "RN50 20Augs": 1e-3, 20, 0.75, 0.7, 0.999, 1e-3, 0.6, 1e-4, 1000, [512, 128];
}

/// Looks a preset up by name, ignoring ASCII case.
pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name))
}
