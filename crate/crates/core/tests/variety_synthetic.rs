//! Held-out accuracy of the variety classifier on a synthetic separable
//! corpus: two vocabularies with 20% overlap, 1,000 documents per class.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use retrocorpus::corpus::{Document, DomainTag, Variety};
use retrocorpus::variety::{classify, train_classifier, VarietyLabel};

fn synth_doc(id: String, variety: Variety, vocab: &[String], rng: &mut StdRng) -> Document {
    let words: Vec<&str> = (0..rng.gen_range(30..60))
        .map(|_| vocab[rng.gen_range(0..vocab.len())].as_str())
        .collect();
    Document {
        id,
        text: words.join(" "),
        variety,
        domain: DomainTag::Other,
        source: "synthetic".to_string(),
        meta: Default::default(),
    }
}

#[test]
fn held_out_accuracy_reaches_ninety_five_percent() {
    let start = std::time::Instant::now();
    let mut rng = StdRng::seed_from_u64(42);

    // 100-word vocabularies per class, 20 of them shared (20% overlap).
    let shared: Vec<String> = (0..20).map(|i| format!("comum{i:03}")).collect();
    let mut target_vocab: Vec<String> = (0..80).map(|i| format!("alvo{i:03}")).collect();
    let mut other_vocab: Vec<String> = (0..80).map(|i| format!("resto{i:03}")).collect();
    target_vocab.extend(shared.iter().cloned());
    other_vocab.extend(shared.iter().cloned());

    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for i in 0..1000 {
        let t = synth_doc(format!("t{i}"), Variety::TargetVariety, &target_vocab, &mut rng);
        let o = synth_doc(format!("o{i}"), Variety::OtherVariety, &other_vocab, &mut rng);
        if i < 800 {
            train.push(t);
            train.push(o);
        } else {
            held_out.push(t);
            held_out.push(o);
        }
    }

    let model = train_classifier(&train, 1.0).unwrap();
    let mut correct = 0usize;
    for doc in &held_out {
        let (label, _) = classify(doc, &model).unwrap();
        let expected = match doc.variety {
            Variety::TargetVariety => VarietyLabel::TargetVariety,
            _ => VarietyLabel::OtherVariety,
        };
        if label == expected {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / held_out.len() as f64;
    assert!(accuracy >= 0.95, "held-out accuracy {accuracy}");
    assert!(
        start.elapsed().as_secs() < 10,
        "training+classification took {:?}",
        start.elapsed()
    );
}
