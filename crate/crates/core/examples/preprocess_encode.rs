//! Tokenisation, stopword removal, vocabulary construction and fixed-length encoding.

use cyberbully_dnn::text::{compute_max_len, encode, preprocess, Vocabulary};

fn main() -> cyberbully_dnn::Result<()> {
    let raw = [
        "You are SO dumb lol!!! nobody likes you",
        "Check out http://example.com, it's great :)",
        "@someone   why would you even say that??",
        "go away loser",
    ];
    let posts: Vec<Vec<String>> = raw.iter().map(|r| preprocess(r)).collect();
    for (r, p) in raw.iter().zip(&posts) {
        println!("{r:?}\n  -> {p:?}");
    }

    let vocab = Vocabulary::build(&posts, None);
    println!("\nvocabulary ({} entries, checksum {}):", vocab.len(), &vocab.checksum()[..12]);
    for (i, t) in vocab.tokens().iter().enumerate() {
        println!("  {i:>2} {t}");
    }

    let counts: Vec<usize> = posts.iter().map(Vec::len).collect();
    let max_len = compute_max_len(&counts)?;
    println!("\nL_max = {max_len}");
    for p in &posts {
        println!("  {:?}", encode(p, &vocab, max_len).indices);
    }
    let unseen = preprocess("totally unseen words dumb");
    println!("unseen post -> {:?}", encode(&unseen, &vocab, max_len).indices);
    Ok(())
}
