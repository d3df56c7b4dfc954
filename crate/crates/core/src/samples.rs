//! Example programs shipped with the crate.

/// Network troubleshooting tree: an Ethernet branch plus Wi-Fi and WSN branches.
pub const NETWORK_SOURCE: &str = include_str!("../samples/network.dtd");

/// A program whose messages are all references, and the table that resolves them.
pub const STICKER_SOURCE: &str = include_str!("../samples/sticker.dtd");
pub const STICKER_REFS: &str = include_str!("../samples/sticker.refs");
