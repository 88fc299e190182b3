pub mod caloron;
pub mod centext;
pub mod forms;
pub mod gerbe;
pub mod grid;
pub mod liegroup;
pub mod loops;
pub mod sample;
pub mod suite;
