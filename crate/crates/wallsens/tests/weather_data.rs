use std::path::Path;

use wallsens::weather::{SyntheticWeather, WeatherSeries};

#[test]
fn bundled_weather_matches_the_generator() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_weather.csv");
    let bundled = WeatherSeries::read_csv(&path).unwrap();
    let fresh = SyntheticWeather::default().generate().unwrap();
    assert_eq!(bundled.len(), fresh.len());
    assert_eq!(bundled.step, fresh.step);
    for (a, b) in [
        (&bundled.q_sw, &fresh.q_sw),
        (&bundled.t_out, &fresh.t_out),
        (&bundled.t_in, &fresh.t_in),
    ] {
        let d = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-9, "max difference {d}");
    }
}
