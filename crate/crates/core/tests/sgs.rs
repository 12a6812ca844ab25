use proptest::prelude::*;
use splitdg::operators::OperatorSet;
use splitdg::physics::{FlowGradient, GasModel, Primitive};
use splitdg::sgs::{
    cusp_mode_weights, eddy_viscosity_stress, filter_width, smagorinsky_stress, strain_magnitude, Averaging,
    SgsConfig, SgsModel, SgsModelKind, SgsNode, Tensor,
};

prop_compose! {
    fn gradient()(v in proptest::array::uniform9(-3.0f64..3.0)) -> FlowGradient {
        let mut g = FlowGradient::default();
        for i in 0..3 {
            for j in 0..3 {
                g.dv[i][j] = v[3 * i + j];
            }
        }
        g
    }
}

fn trace(t: &Tensor) -> f64 {
    t[0][0] + t[1][1] + t[2][2]
}

proptest! {
    #[test]
    fn smagorinsky_stress_symmetric_trace_free_and_dissipative(g in gradient(), c in 0.05f64..0.3, d in 0.01f64..1.0) {
        let t = smagorinsky_stress(&g, d, c);
        let scale = t.iter().flatten().fold(1e-300f64, |m, v| m.max(v.abs()));
        prop_assert!(trace(&t).abs() < 1e-13 * scale.max(1.0));
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((t[i][j] - t[j][i]).abs() < 1e-14 * scale.max(1.0));
            }
        }
        // tau_ij S_ij <= 0: energy drains from the resolved scales
        let s = g.strain();
        let work: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| t[i][j] * s[i][j]).sum();
        prop_assert!(work <= 1e-12);
        let mag = strain_magnitude(&s);
        let expect = -(c * d).powi(2) * mag.powi(3) / 2.0;
        let dev: f64 = (0..3).map(|i| s[i][i]).sum::<f64>();
        if dev.abs() < 1e-12 {
            prop_assert!((work - expect).abs() < 1e-10 * expect.abs().max(1e-12));
        }
    }

    #[test]
    fn rotation_part_does_not_contribute(g in gradient(), a in -2.0f64..2.0) {
        let mut r = g;
        r.dv[0][1] += a;
        r.dv[1][0] -= a;
        let t1 = eddy_viscosity_stress(&g, 0.01);
        let t2 = eddy_viscosity_stress(&r, 0.01);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((t1[i][j] - t2[i][j]).abs() < 1e-12);
            }
        }
    }
}

type GradFn = fn([f64; 3]) -> [[f64; 3]; 3];

fn element_inputs(degree: usize, shift: [f64; 3], vel: fn([f64; 3]) -> [f64; 3], f: GradFn) -> (Vec<Primitive>, Vec<FlowGradient>) {
    let ops = OperatorSet::new(degree).unwrap();
    let np = degree + 1;
    let mut prims = Vec::new();
    let mut grads = Vec::new();
    for n in 0..np * np * np {
        let x = [ops.nodes[n % np], ops.nodes[(n / np) % np], ops.nodes[n / (np * np)]];
        let v = vel(x);
        prims.push(Primitive {
            rho: 1.0,
            v: std::array::from_fn(|k| v[k] + shift[k]),
            p: 1.0,
            h: 3.5,
        });
        let mut g = FlowGradient::default();
        g.dv = f(x);
        grads.push(g);
    }
    (prims, grads)
}

fn zero_velocity(_: [f64; 3]) -> [f64; 3] {
    [0.0; 3]
}

fn run(kind: SgsModelKind, degree: usize, prims: &[Primitive], grads: &[FlowGradient]) -> Vec<SgsNode> {
    let ops = OperatorSet::new(degree).unwrap();
    let model = SgsModel::new(
        SgsConfig {
            model: kind,
            averaging: Averaging::Cell,
            ..Default::default()
        },
        &ops,
    )
    .unwrap();
    let mut out = vec![SgsNode::default(); prims.len()];
    model.element([0.5; 3], prims, grads, &mut out);
    out
}

#[test]
fn models_are_galilean_invariant() {
    let n = 5;
    // Taylor-Green-like field with a sign giving a positive dynamic coefficient
    const K: f64 = 3.0;
    let vel = |x: [f64; 3]| {
        let (sx, cx) = (K * x[0]).sin_cos();
        let (sy, cy) = (K * x[1]).sin_cos();
        let (sz, cz) = (K * x[2]).sin_cos();
        [-sx * cy * cz, cx * sy * cz - 0.3 * sz, -0.2 * sx * sy]
    };
    let grad = |x: [f64; 3]| {
        let (sx, cx) = (K * x[0]).sin_cos();
        let (sy, cy) = (K * x[1]).sin_cos();
        let (sz, cz) = (K * x[2]).sin_cos();
        [
            [-K * cx * cy * cz, K * sx * sy * cz, K * sx * cy * sz],
            [-K * sx * sy * cz, K * cx * cy * cz, -K * cx * sy * sz - 0.3 * K * cz],
            [-0.2 * K * cx * sy, -0.2 * K * sx * cy, 0.0],
        ]
    };
    for kind in [SgsModelKind::Smagorinsky, SgsModelKind::Vms, SgsModelKind::PlateauCusp, SgsModelKind::DynamicSmagorinsky] {
        let (p0, g0) = element_inputs(n, [0.0; 3], vel, grad);
        let (p1, g1) = element_inputs(n, [5.0, -3.0, 2.0], vel, grad);
        let a = run(kind, n, &p0, &g0);
        let b = run(kind, n, &p1, &g1);
        let scale = a.iter().map(|o| o.mu_t).fold(0.0, f64::max);
        assert!(scale > 0.0, "{kind:?} inactive");
        for (x, y) in a.iter().zip(&b) {
            assert!((x.mu_t - y.mu_t).abs() < 1e-9 * scale, "{kind:?}");
            for i in 0..3 {
                for j in 0..3 {
                    assert!((x.stress[i][j] - y.stress[i][j]).abs() < 1e-9 * scale * 50.0, "{kind:?}");
                }
            }
        }
    }
}

#[test]
fn vms_ignores_large_scale_gradients() {
    let n = 7;
    // velocity gradients of degree <= n_filter = 3 lie in the resolved large scales
    let (p, g) = element_inputs(n, [0.0; 3], zero_velocity, |x| [[x[0] * x[1], x[2].powi(3), 0.0], [1.0, 0.0, x[1] * x[1]], [0.0, 0.0, -x[0]]]);
    let out = run(SgsModelKind::Vms, n, &p, &g);
    for o in &out {
        assert!(o.stress.iter().flatten().all(|v| v.abs() < 1e-12));
        assert!(o.mu_t.abs() < 1e-12);
    }
    let smag = run(SgsModelKind::Smagorinsky, n, &p, &g);
    assert!(smag.iter().any(|o| o.mu_t > 1e-6));
}

#[test]
fn smagorinsky_node_matches_formula() {
    let n = 3;
    let (p, g) = element_inputs(n, [0.0; 3], zero_velocity, |_| [[0.0, 2.0, 0.0], [0.0; 3], [0.0; 3]]);
    let out = run(SgsModelKind::Smagorinsky, n, &p, &g);
    let delta = filter_width([0.5; 3], n);
    let c = SgsConfig::default().c_s();
    for o in &out {
        // tau_xy = -C^2 Delta^2 |S| * 2 S_xy, |S| = 2; stored as -rho tau
        let expect = (c * delta).powi(2) * 2.0 * 2.0;
        assert!((o.stress[0][1] - expect).abs() < 1e-14);
        assert!((o.mu_t - (c * delta).powi(2) * 2.0).abs() < 1e-15);
    }
}

#[test]
fn cusp_weights_grow_with_mode_number() {
    let w = cusp_mode_weights(7, 5);
    assert!((w[5] - 1.0).abs() < 1e-15);
    for p in w.windows(2) {
        assert!(p[1] > p[0]);
    }
    assert!(w[0] < 1e-3);
}

#[test]
fn dynamic_coefficient_nonnegative_and_bounded() {
    let n = 5;
    let (p, g) = element_inputs(n, [0.0; 3], zero_velocity, |x| {
        [[0.3 * x[0], (3.0 * x[1]).sin(), x[2]], [x[2] * x[0], -0.3 * x[0], 0.5], [(2.0 * x[0]).cos(), x[1], 0.0]]
    });
    let ops = OperatorSet::new(n).unwrap();
    let model = SgsModel::new(
        SgsConfig {
            model: SgsModelKind::DynamicSmagorinsky,
            averaging: Averaging::Cell,
            ..Default::default()
        },
        &ops,
    )
    .unwrap();
    let c = model.dynamic_coefficients(&p, &g);
    assert!(!c.is_empty());
    assert!(c.iter().all(|v| *v >= 0.0 && v.is_finite()));
}

#[test]
fn configuration_errors() {
    let bad = SgsConfig {
        model: SgsModelKind::Vms,
        n_filter: 7,
        ..Default::default()
    };
    assert!(bad.validate(7).is_err());
    assert!(SgsConfig::default().validate(7).is_ok());
    let g = GasModel::default();
    assert!(g.validate().is_ok());
}
