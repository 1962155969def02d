use super::*;

#[test]
fn config_values_yield_to_flags() {
    let c = ConfigFile::parse("# defaults\nepochs = 7\nbatch-size=16\n\nprofile=paper\n").unwrap();
    assert_eq!(c.pick(None::<u32>, "epochs").unwrap(), Some(7));
    assert_eq!(c.pick(Some(3u32), "epochs").unwrap(), Some(3));
    assert_eq!(c.pick(None::<usize>, "batch_size").unwrap(), Some(16));
    assert_eq!(c.pick(None::<Profile>, "profile").unwrap(), Some(Profile::Paper));
    assert!(c.pick(None::<u32>, "missing").unwrap().is_none());
    assert!(ConfigFile::parse("epochs 7").is_err());
    assert!(ConfigFile::parse("epochs=seven").unwrap().pick(None::<u32>, "epochs").is_err());
}

#[test]
fn profiles_fix_the_architecture() {
    let (h, _) = profile_settings(Profile::Paper, 27);
    assert_eq!((h.embedding_dim, h.hidden_dim, h.num_layers), (300, 500, 3));
    let (h, t) = profile_settings(Profile::Desk, 27);
    assert_eq!((h.embedding_dim, h.hidden_dim, h.num_layers, h.latent_dim), (64, 128, 2, 56));
    assert_eq!(t.batch_size, 32);
}

#[test]
fn targets_from_flags_and_molecules() {
    let c = ConfigFile::default();
    let tamiflu = TargetArgs { mw: Some(312.2), logp: Some(1.285), hbd: Some(2), hba: Some(5), tpsa: Some(90.64), ..Default::default() };
    let t = resolve_target(&tamiflu, &c, None).unwrap().unwrap();
    assert_eq!((t.mw, t.logp, t.hbd, t.hba, t.tpsa), (312.2, 1.285, 2, 5, 90.64));
    let partial = TargetArgs { mw: Some(300.0), ..Default::default() };
    assert!(resolve_target(&partial, &c, None).is_err());
    let aspirin = TargetArgs { like: Some("CC(=O)Oc1ccccc1C(=O)O".into()), logp: Some(2.0), ..Default::default() };
    let t = resolve_target(&aspirin, &c, None).unwrap().unwrap();
    assert_eq!((t.hbd, t.hba, t.logp), (1, 3, 2.0));
    assert!((t.mw - 180.04).abs() < 0.01);
    assert!(resolve_target(&TargetArgs::default(), &c, None).unwrap().is_none());
}
