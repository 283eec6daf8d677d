fn main() {
    let cfg = gmqdt::config::RunConfig::default();
    print!("{}", toml::to_string_pretty(&cfg).unwrap());
}
