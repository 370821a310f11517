//! Built-in instances with their expected verdicts.

use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Expected {
    Recurrent,
    /// Recurrent forward and backward in time.
    RecurrentBothDirections,
    NotRecurrent,
}

impl Expected {
    pub fn is_recurrent(self) -> bool {
        self != Expected::NotRecurrent
    }

    pub fn label(self) -> &'static str {
        match self {
            Expected::Recurrent => "recurrent",
            Expected::RecurrentBothDirections => "recurrent both directions",
            Expected::NotRecurrent => "not recurrent",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Instance {
    pub name: &'static str,
    pub summary: &'static str,
    pub expected: Expected,
    /// How the expected verdict is known.
    pub basis: &'static str,
    #[serde(skip)]
    pub toml: &'static str,
}

impl Instance {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::from_toml(self.toml).unwrap_or_else(|e| panic!("catalog entry {} is invalid: {e:#}", self.name))
    }
}

pub fn instances() -> &'static [Instance] {
    CATALOG
}

pub fn find(name: &str) -> Option<&'static Instance> {
    CATALOG.iter().find(|i| i.name == name)
}

pub fn names() -> Vec<&'static str> {
    CATALOG.iter().map(|i| i.name).collect()
}

const CATALOG: &[Instance] = &[
    Instance {
        name: "halfline-expdecay",
        summary: "left translation on L^1 of [0, inf), rho = exp(-x)",
        expected: Expected::Recurrent,
        basis: "lim inf rho = 0",
        toml: r#"
schema_version = 1
name = "halfline-expdecay"
[space]
domain = "half_line"
trunc = 200.0
grid_points = 20000
mode = "lp"
p = 1.0
[weight]
name = "exponential"
params = { rate = -1.0 }
[family]
kind = "translation"
[analysis]
operations = ["admissibility", "criterion", "nested_ball", "gdelta"]
criterion = "liminf"
detector = "nested_ball"
initial = { kind = "indicator", low = 0.0, high = 1.0 }
eps0 = 0.5
stages = 6
"#,
    },
    Instance {
        name: "halfline-flat",
        summary: "left translation on L^1 of [0, inf), rho = 1",
        expected: Expected::NotRecurrent,
        basis: "translated mass leaves every compact",
        toml: r#"
schema_version = 1
name = "halfline-flat"
[space]
domain = "half_line"
trunc = 200.0
grid_points = 20000
mode = "lp"
p = 1.0
[weight]
name = "constant"
params = { value = 1.0 }
[family]
kind = "translation"
[analysis]
operations = ["admissibility", "criterion", "nested_ball", "direct_scan"]
criterion = "liminf"
detector = "nested_ball"
initial = { kind = "indicator", low = 0.0, high = 1.0 }
"#,
    },
    Instance {
        name: "halfline-growing",
        summary: "left translation on L^1 of [0, inf), rho = exp(x); spectral radius below 1",
        expected: Expected::NotRecurrent,
        basis: "||T(t)|| <= exp(-t)",
        toml: r#"
schema_version = 1
name = "halfline-growing"
[space]
domain = "half_line"
trunc = 20.48
grid_points = 2048
mode = "lp"
p = 1.0
[weight]
name = "exponential"
params = { rate = 1.0 }
[family]
kind = "translation"
[analysis]
operations = ["admissibility", "criterion", "nested_ball", "direct_scan", "spectrum"]
criterion = "liminf"
detector = "nested_ball"
initial = { kind = "indicator", low = 0.0, high = 1.0 }
tol = 0.1
"#,
    },
    Instance {
        name: "line-symmetric",
        summary: "left translation group on L^1 of R, rho = exp(-|x|)",
        expected: Expected::RecurrentBothDirections,
        basis: "rho decays in both directions",
        toml: r#"
schema_version = 1
name = "line-symmetric"
[space]
domain = "line"
trunc = 1200.0
grid_points = 24000
mode = "lp"
p = 1.0
[weight]
name = "symmetric_exponential"
params = { rate = 1.0 }
[family]
kind = "translation"
[analysis]
operations = ["admissibility", "criterion", "nested_ball"]
criterion = "two_sided_decay"
detector = "nested_ball"
directions = ["forward", "backward"]
initial = { kind = "indicator", low = 0.0, high = 1.0 }
eps0 = 0.5
stages = 6
"#,
    },
    Instance {
        name: "line-oneside",
        summary: "left translation group on L^1 of R, rho = exp(-max(x, 0))",
        expected: Expected::NotRecurrent,
        basis: "rho does not decay as x -> -inf",
        toml: r#"
schema_version = 1
name = "line-oneside"
[space]
domain = "line"
trunc = 1200.0
grid_points = 24000
mode = "lp"
p = 1.0
[weight]
name = "one_sided_exponential"
params = { rate = 1.0 }
[family]
kind = "translation"
[analysis]
operations = ["admissibility", "criterion", "nested_ball"]
criterion = "two_sided_decay"
detector = "nested_ball"
directions = ["forward", "backward"]
initial = { kind = "indicator", low = 0.0, high = 1.0 }
eps0 = 0.5
stages = 6
"#,
    },
    Instance {
        name: "dilation-c0",
        summary: "composition with x exp(t) on C0 of (0, inf), rho = x / (1 + x^2)",
        expected: Expected::Recurrent,
        basis: "sup of rho over preimage and image of [1, 2] tends to 0",
        toml: r#"
schema_version = 1
name = "dilation-c0"
[space]
domain = "half_line"
trunc = 52000.0
grid_points = 208000
mode = "c0"
[weight]
name = "rational_bump"
[family]
kind = "composition"
semiflow = "dilation"
semiflow_params = { rate = 1.0 }
[analysis]
operations = ["admissibility", "criterion", "nested_ball"]
criterion = "c0_semiflow"
detector = "nested_ball"
initial = { kind = "sin2_bump", low = 1.0, high = 2.0, amplitude = 1e-12 }
crit_horizon = 60.0
compacts = [[1.0, 2.0]]
eps0 = 0.5
stages = 4
adm_horizon = 5.0
"#,
    },
    Instance {
        name: "dilation-lp",
        summary: "composition with x exp(t) on L^1 of (0, inf), rho = (1 + x)^-3",
        expected: Expected::Recurrent,
        basis: "image mass of [1, 2] decays like exp(-2t)",
        toml: r#"
schema_version = 1
name = "dilation-lp"
[space]
domain = "half_line"
trunc = 52000.0
grid_points = 208000
mode = "lp"
p = 1.0
[weight]
name = "power_decay"
params = { power = 3.0, m = 1.0, omega = 2.0 }
[family]
kind = "composition"
semiflow = "dilation"
semiflow_params = { rate = 1.0 }
[analysis]
operations = ["admissibility", "criterion", "nested_ball"]
criterion = "lp_semiflow"
detector = "nested_ball"
initial = { kind = "sin2_bump", low = 1.0, high = 2.0, amplitude = 1e-12 }
crit_horizon = 60.0
compacts = [[1.0, 2.0]]
eps0 = 0.5
stages = 4
adm_horizon = 5.0
"#,
    },
    Instance {
        name: "diagonal-rational",
        summary: "diag(exp(i theta_j t)) on C^2, theta = (2 pi, 4 pi)",
        expected: Expected::Recurrent,
        basis: "T(n) = I for every integer n",
        toml: r#"
schema_version = 1
name = "diagonal-rational"
[space]
mode = "lp"
p = 2.0
[weight]
name = "constant"
[family]
kind = "diagonal"
cycles = [1.0, 2.0]
[analysis]
operations = ["criterion", "direct_scan", "rigidity", "uniform_rigidity", "spectrum"]
criterion = "discrete_spectrum"
detector = "direct_scan"
initial = { kind = "vector", values = [[1.0, 0.0], [0.5, 0.5]] }
tol = 1e-3
"#,
    },
    Instance {
        name: "diagonal-irrational",
        summary: "exp(i theta t) on C, theta = 2 pi sqrt(2)",
        expected: Expected::Recurrent,
        basis: "Dirichlet approximation of sqrt(2) n modulo 1",
        toml: r#"
schema_version = 1
name = "diagonal-irrational"
[space]
mode = "lp"
p = 2.0
[weight]
name = "constant"
[family]
kind = "diagonal"
cycles = ["sqrt:2"]
[analysis]
operations = ["criterion", "direct_scan", "uniform_rigidity", "spectrum"]
criterion = "discrete_spectrum"
detector = "direct_scan"
initial = { kind = "basis", index = 0 }
tol = 0.05
horizon = 10000.0
"#,
    },
];
