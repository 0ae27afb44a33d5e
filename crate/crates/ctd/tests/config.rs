use ctd::config::{parse_dims, parse_schedule, Command, ExperimentConfig, Format};
use ctd::output::{fmt_f64, ledger_json, Header};
use ctd_core::{Mode, ModelParams, WellLedger};

#[test]
fn plain_file_with_comments() {
    let cfg = ExperimentConfig::parse(
        "# rotor chain\nepsilon = 0.25\ntruncation=4 # wells\nbeta=1.5,20\nburn-in=10\nsweeps=1e6\ndims=32x32\nseed=7\n",
    )
    .unwrap();
    assert_eq!(cfg.epsilon, 0.25);
    assert_eq!(cfg.truncation, 4);
    assert_eq!(cfg.beta, vec![1.5, 20.0]);
    assert_eq!(cfg.burn_in, 10);
    assert_eq!(cfg.sweeps, 1_000_000);
    assert_eq!(cfg.dims, vec![32, 32]);
    assert_eq!(cfg.seed, Some(7));
}

#[test]
fn errors_name_line_and_field() {
    let e = ExperimentConfig::parse("epsilon=0.1\nsweeps=many\n").unwrap_err();
    assert!(e.contains("line 2") && e.contains("sweeps"), "{e}");
    assert!(ExperimentConfig::parse("nonsense").is_err());
    assert!(ExperimentConfig::parse("colour=blue").is_err());
    assert!(ExperimentConfig::parse("tol.nothing=1").is_err());
    assert!(ExperimentConfig::parse("seed=-1").is_err());
    assert!(ExperimentConfig::parse("beta=-2").is_err());
}

#[test]
fn schedule_and_dims_syntax() {
    assert_eq!(parse_schedule("3..40"), Ok((3, 40)));
    assert!(parse_schedule("4..4").is_err());
    assert!(parse_schedule("0..3").is_err());
    assert_eq!(parse_dims("1000"), Ok(vec![1000]));
    assert_eq!(parse_dims("16x8"), Ok(vec![16, 8]));
    assert!(parse_dims("1").is_err());
    assert!(parse_dims("2x2x2").is_err());
}

#[test]
fn header_round_trips_every_field() {
    let mut cfg = ExperimentConfig::parse("epsilon=0.3\nmode=paper\nbeta=0.1\nschedule=2..5\nseed=99\nformat=json\ninit=neel\nw_global=0.35\n").unwrap();
    cfg.set("tol.mcmc_tv", "0.01").unwrap();
    cfg.set("criteria", "1,7").unwrap();
    let header = Header::new(Command::Verify, &cfg);
    let mut text = Vec::new();
    header.write_csv(&mut text).unwrap();
    let back = ExperimentConfig::parse(std::str::from_utf8(&text).unwrap()).unwrap();
    assert_eq!(back.command, Some(Command::Verify));
    assert_eq!(back.mode, Mode::Paper);
    assert_eq!(back.format, Format::Json);
    assert_eq!(back.tolerances.mcmc_tv, 0.01);
    assert_eq!(back.criteria, vec![1, 7]);
    assert_eq!(Header::new(Command::Verify, &back).entries, header.entries);
}

#[test]
fn floats_keep_seventeen_digits() {
    assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    for x in [std::f64::consts::PI, 1e-300, -2.5e17, 5e-324] {
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
    assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
}

#[test]
fn ledger_serializes_with_decimal_strings() {
    let l = WellLedger::new(ModelParams::new(0.1, 5, Mode::Exact).unwrap()).unwrap();
    let v = ledger_json(&l);
    let text = serde_json::to_string(&v).unwrap();
    let wells = v["wells"].as_array().unwrap();
    assert_eq!(wells.len(), 5);
    for (w, well) in wells.iter().zip(l.wells()) {
        let depth = w["depth"].as_str().unwrap();
        assert_eq!(depth.parse::<f64>().unwrap(), well.depth);
        let lw = w["log_half_width"].as_str().unwrap();
        assert_eq!(lw.parse::<f64>().unwrap(), well.log_half_width);
    }
    assert_eq!(wells[0]["character"], "AF");
    assert_eq!(wells[1]["character"], "F");
    assert!(text.contains("\"epsilon\":\"1.0000000000000001e-1\""));
}
