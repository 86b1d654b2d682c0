use causalaf::graph::BehavioralGraph;
use causalaf::scenarios;
use causalaf::sim::scenario::encode_attr;
use causalaf::sim::{execute, objective};
use ndarray::Array1;

fn set_self(spec: &causalaf::sim::ScenarioSpec, bg: &mut BehavioralGraph, i: usize, vals: [f64; 4], tname: &str) {
    let tmpl = &spec.templates[tname];
    let windows = [tmpl.bounds.x, tmpl.bounds.y, tmpl.bounds.vx, tmpl.bounds.vy];
    let mut slice = Array1::zeros(spec.dims.edge_dim());
    slice[1] = 1.0;
    for (k, (v, w)) in vals.iter().zip(windows).enumerate() {
        slice[spec.dims.edge_types + k] = encode_attr(*v, w, spec.decode_scale);
    }
    bg.set_edge(i, i, &slice);
}

fn main() {
    // ---- traffic light: T, A, R ----
    let spec = scenarios::traffic_light_scenario(0);
    println!("traffic-light sweep: A(-20, v=10), varying green time and R start/speed");
    for t_green in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5] {
        for (r_y, r_vy) in [(14.0, -8.0), (18.0, -9.0), (22.0, -11.0), (26.0, -12.0), (12.0, -7.0)] {
            let cg = &spec.cg;
            let mut bg = BehavioralGraph::new(spec.dims);
            bg.push_node(cg.type_id("T").unwrap());
            // light timing rides on the vx channel with its own window
            let tmpl = &spec.templates["T"];
            let mut slice = Array1::zeros(spec.dims.edge_dim());
            slice[1] = 1.0;
            slice[spec.dims.edge_types + 2] = encode_attr(t_green, tmpl.green_switch.unwrap(), spec.decode_scale);
            bg.set_edge(0, 0, &slice);
            bg.push_node(cg.type_id("A").unwrap());
            set_self(&spec, &mut bg, 1, [-20.0, 0.0, 10.0, 0.0], "A");
            bg.push_node(cg.type_id("R").unwrap());
            set_self(&spec, &mut bg, 2, [-1.75, r_y, 0.0, r_vy], "R");
            let t = execute(&bg, &spec).unwrap();
            if t.min_distance < 1.5 {
                println!("  green@{t_green:.1} R(y={r_y},vy={r_vy}): min {:.2} obj {}", t.min_distance, objective(&t, 0.5));
            }
        }
    }
    // ---- lane changing: S, A, R ----
    let spec = scenarios::lane_change_scenario(0);
    println!("lane-change sweep: S position/protrusion, R start/speed (A at -32, v=8.5)");
    for s_x in [-8.0, -2.0, 2.0, 6.0] {
      for s_y in [0.3, 0.6, 0.9] {
        for (r_x, r_vx) in [(30.0, -8.0), (45.0, -9.0), (60.0, -10.0), (75.0, -11.0), (90.0, -12.0), (38.0, -7.0)] {
            let cg = &spec.cg;
            let mut bg = BehavioralGraph::new(spec.dims);
            bg.push_node(cg.type_id("S").unwrap());
            set_self(&spec, &mut bg, 0, [s_x, s_y, 0.0, 0.0], "S");
            bg.push_node(cg.type_id("A").unwrap());
            set_self(&spec, &mut bg, 1, [-32.0, 0.0, 8.5, 0.0], "A");
            bg.push_node(cg.type_id("R").unwrap());
            set_self(&spec, &mut bg, 2, [r_x, 3.5, r_vx, 0.0], "R");
            let t = execute(&bg, &spec).unwrap();
            if t.min_distance < 1.0 {
                println!("  S({s_x},{s_y}) R(x={r_x},vx={r_vx}): min {:.2} obj {} steps {}", t.min_distance, objective(&t, 0.5), t.step_count);
            }
        }
      }
    }
}
