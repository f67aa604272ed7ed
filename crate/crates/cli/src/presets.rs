//! Named scene configurations, one or more per reproduced figure.

use crate::config::*;
use crate::error::CliError;
use crate::units::Length;

pub const DEFAULT_SEED: u64 = 1;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Scene,
}

impl Preset {
    pub fn config(&self, seed: u64) -> SceneConfig {
        let mut cfg = SceneConfig::new(seed, (self.build)());
        cfg.resolve().expect("presets are valid");
        cfg
    }
}

fn um(v: f64) -> Length {
    Length::from_si(v * 1e-6)
}

fn sigma_only() -> Vec<BeamConfig> {
    vec![BeamConfig::new("ESigma", &[0, 2, 4])]
}

pub static PRESETS: &[Preset] = &[
    Preset {
        name: "fig1",
        description: "paraxial E0 vs ESigma: x/z cuts, Gouy phase, trap metrics, mirror fringes (r = -0.8)",
        build: || Scene::ParaxialField(ParaxialFieldScene::default()),
    },
    Preset {
        name: "fig2",
        description: "SLM encoding of ESigma (512^2 pixels) and Fresnel-Kirchhoff first-order focus vs ideal",
        build: || {
            Scene::SlmVerify(SlmVerifyScene {
                grid: 512,
                ..SlmVerifyScene::default()
            })
        },
    },
    Preset {
        name: "fig3",
        description: "Debye-Wolf focus at NA 0.7, F0 0.35: cuts, x-z maps, FWHM, volumes, trap frequencies",
        build: || Scene::DebyeField(DebyeFieldScene::default()),
    },
    Preset {
        name: "fig4",
        description: "trap frequencies vs filling factor 0.3..1.6 for E0 and ESigma",
        build: || {
            Scene::F0Sweep(F0SweepScene {
                f0_start: 0.3,
                f0_stop: 1.6,
                f0_step: 0.02,
                z_half: um(15.0),
                ..F0SweepScene::default()
            })
        },
    },
    Preset {
        name: "fig5a",
        description: "ellipticity vector in the x-z plane and max |dCy/dx| in the central lobe",
        build: || Scene::Ellipticity(EllipticityScene::default()),
    },
    Preset {
        name: "fig6",
        description:
            "paraxial Gouy-phase gradients vs F0, optimal filling factors, vector on-axis gradients for p = 0 and p = 4",
        build: || Scene::OptimalF0(OptimalF0Scene::default()),
    },
    Preset {
        name: "fig7",
        description: "focal volumes vs filling factor 0.3..3 for E0 and ESigma",
        build: || {
            Scene::F0Sweep(F0SweepScene {
                f0_start: 0.3,
                f0_stop: 3.0,
                f0_step: 0.05,
                z_half: um(20.0),
                ..F0SweepScene::default()
            })
        },
    },
    Preset {
        name: "fig9b",
        description: "vector focus reflected by a planar surface: on-axis fringes and x-z maps",
        build: || Scene::ReflectionFringes(ReflectionFringesScene::default()),
    },
    Preset {
        name: "fig11-r08-1d",
        description: "1D transport Monte Carlo, 1000 atoms, r = -0.8, E0 and ESigma",
        build: || Scene::Transport1d(TransportScene::default()),
    },
    Preset {
        name: "fig11-r03-1d",
        description: "1D transport Monte Carlo, 1000 atoms, r = -0.3, ESigma",
        build: || {
            Scene::Transport1d(TransportScene {
                reflectivity: -0.3,
                beams: sigma_only(),
                ..TransportScene::default()
            })
        },
    },
    Preset {
        name: "fig11-r08-3d",
        description: "3D transport Monte Carlo, 1000 atoms, r = -0.8, ESigma",
        build: || {
            Scene::Transport3d(TransportScene {
                beams: sigma_only(),
                ..TransportScene::default()
            })
        },
    },
    Preset {
        name: "sm-s3",
        description: "ESigma trap around the anti-trapping filling-factor window, F0 0.9..1.4",
        build: || {
            Scene::F0Sweep(F0SweepScene {
                beams: sigma_only(),
                f0_start: 0.9,
                f0_stop: 1.4,
                f0_step: 0.01,
                z_half: um(15.0),
                ..F0SweepScene::default()
            })
        },
    },
    Preset {
        name: "sm-s5",
        description: "focus trajectory of the transport sequence (no Monte Carlo)",
        build: || {
            Scene::Transport1d(TransportScene {
                profile_only: true,
                ..TransportScene::default()
            })
        },
    },
];

pub fn find(name: &str) -> Result<&'static Preset, CliError> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| CliError::UnknownPreset(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_unique_and_valid() {
        assert!(PRESETS.len() >= 11);
        let mut names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), PRESETS.len());
        assert!(names.contains(&"fig11-r08-1d"));
        for p in PRESETS {
            let cfg = p.config(3);
            assert_eq!(SceneConfig::from_toml(&cfg.to_toml()).unwrap(), cfg, "{}", p.name);
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(find("fig99"), Err(CliError::UnknownPreset(_))));
    }
}
