use laconv_core::laresnet::count_params;
use laconv_core::Result;

use crate::config::RunConfig;
use crate::EXIT_OK;

pub fn table(cfg: &RunConfig) -> String {
    let count = count_params(&cfg.model);
    let mut s = format!("{:<14} {:>5} {:>6} {:>10}\n", "layer", "c_in", "c_out", "params");
    for l in &count.layers {
        s += &format!("{:<14} {:>5} {:>6} {:>10}\n", l.name, l.c_in, l.c_out, l.params);
    }
    s += &format!("{:<14} {:>5} {:>6} {:>10}\n", "total", "", "", count.total);
    s
}

pub fn run(cfg: &RunConfig) -> Result<i32> {
    println!(
        "{} (B={}, C={}, k={})",
        cfg.model.mode, cfg.model.blocks, cfg.model.channels, cfg.model.kernel
    );
    print!("{}", table(cfg));
    Ok(EXIT_OK)
}
