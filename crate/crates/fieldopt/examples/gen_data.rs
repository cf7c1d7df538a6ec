// Writes the bundled scenario files under data/.
use fieldopt::scenario::*;
use std::fs;

fn main() {
    let items: Vec<(&str, ScenarioFile)> = vec![
        ("placement_six_well_19x28.json", placement_six_well_scenario()),
        ("five_spot_control_51x51.json", five_spot_control_scenario(8)),
        ("five_spot_control_51x51_single_period.json", five_spot_control_scenario(1)),
        ("five_spot_placement_15x15.json", five_spot_placement_scenario()),
        ("joint_channel_9x9.json", joint_channel_scenario()),
        ("angled_placement_20x20x5.json", angled_placement_scenario()),
    ];
    for (name, scenario) in items {
        let path = format!("data/{name}");
        let json = serde_json::to_string_pretty(&scenario).unwrap();
        fs::write(&path, json + "\n").unwrap();
        println!("wrote {path}");
    }
}
