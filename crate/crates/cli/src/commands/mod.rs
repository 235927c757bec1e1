pub mod gradcheck;
pub mod interp;
pub mod mc_check;
pub mod pwl;
pub mod solve;
