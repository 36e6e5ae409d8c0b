pub mod oracles;
pub mod structural;
