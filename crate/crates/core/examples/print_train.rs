//! Prints the compiled cloner train as a plain-text element list.

fn main() -> Result<(), qcloning::Error> {
    let train = qcloning::optics::build_cloner_train()?;
    print!("{}", train.to_text());
    Ok(())
}
