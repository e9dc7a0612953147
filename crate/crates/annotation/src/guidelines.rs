//! The labeling guideline shown to annotators, versioned so every session
//! records which text it was labeled under.

use serde::Serialize;

pub const GUIDELINE_VERSION: &str = "1.0";

#[derive(Debug, Clone, Serialize)]
pub struct Section {
    pub heading: &'static str,
    pub body: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelDefinition {
    pub label: u8,
    pub name: &'static str,
    pub definition: &'static str,
    pub examples: &'static [&'static str],
}

#[derive(Debug, Clone, Serialize)]
pub struct Guidelines {
    pub version: &'static str,
    pub title: &'static str,
    pub labels: [LabelDefinition; 2],
    pub sections: &'static [Section],
}

pub fn guidelines() -> Guidelines {
    Guidelines {
        version: GUIDELINE_VERSION,
        title: "Labeling Arabic tweets for suicidal ideation",
        labels: [
            LabelDefinition {
                label: 1,
                name: "Suicidal",
                definition: "The author speaks in their own voice about wanting to die, wanting to end \
                             their life, or planning or preparing to harm themselves. Hopelessness \
                             counts when it is tied to a wish not to be alive.",
                examples: &["ابي اموت وارتاح من كل شي", "افكر انهي حياتي الليله"],
            },
            LabelDefinition {
                label: 0,
                name: "Non-Suicidal",
                definition: "Everything else, including figurative uses of death words, news about \
                             suicide, religious or awareness messages, jokes, and quotations of \
                             someone else.",
                examples: &["اموت من الضحك", "الانتحار حرام ولازم نساعد بعض"],
            },
        ],
        sections: &[
            Section {
                heading: "Read the whole tweet",
                body: "Decide from the full text, not from a single keyword. Death words are common in \
                       everyday Arabic expressions of affection, exaggeration or humor.",
            },
            Section {
                heading: "Conditional statements",
                body: "A wish to die that is made to depend on some hypothetical event (\"if this \
                       happens, I will ...\") is not labeled Suicidal on that basis alone. Label it \
                       Suicidal only when the rest of the tweet shows a present intent.",
            },
            Section {
                heading: "Work independently",
                body: "Do not discuss items with the other annotator while labeling. Disagreements are \
                       resolved afterwards.",
            },
            Section {
                heading: "Corrections",
                body: "If you labeled an item by mistake, use the revise action. Every change is kept \
                       in the decision log.",
            },
            Section {
                heading: "Take care",
                body: "The material can be distressing. Take breaks, and stop if you need to.",
            },
        ],
    }
}
