//! Instruction-tuning records: an Arabic preamble, then instruction, input
//! and response sections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ParallelExample;

pub const RECORD_PREAMBLE: &str =
    "فيما يلي أمر توجيه يصف مهمة مرتبطة بمدخل لتزويد النص بسياق اضافي. يرجى صياغة ردود مناسبة لتحقق الطلب بطريقة مناسبة و دقيقة.";
const INSTRUCTION_HEADER: &str = "### الأمر/ التوجيه:";
const INPUT_HEADER: &str = "### المدخل:";
const RESPONSE_HEADER: &str = "### الرد:";

/// Default instruction pool.
pub const DEFAULT_INSTRUCTIONS: [&str; 8] = [
    "قم بتصحيح كل الأخطاء الكتابية في النص التالي ماعدا المتعلقة بالألف والياء وعلامات الترقيم:",
    "الرجاء التدقيق الإملائي والتدقيق النحوي و تصحيح كل الأخطاء في الجملة التالية إلا الخاصة بعلامات الترقيم:",
    "قم بإستكشاف أخطاء التدقيق الإملائي وإصلاحها ماعدا المتعلقة بعلامات الترقيم كالفاصلة  أو علامة إستفهام ، إلخ:",
    "هل يمكنك كل الأخطاء الموجودة في النص التالي ماعدا المتعلقة بعلامات الترقيم كالفاصلة ، النقطة ، إلخ :",
    "هل يمكنك إصلاح كل الأخطاء الإملائية والنحوية ماعدا الأخطاء الخاصة بالألف والياء:",
    "الرجاء إستكشاف أخطاء التدقيق الإملائي النحوي وإصلاحها كلها ماعدا الأخطاء المتعلقة بالألف والياء:",
    "قم بتصحيح كل الأخطاء الكتابية في النص التالي ماعدا المتعلقة بالألف والياء:",
    "الرجاء تصحيح كل الأخطاء الموجودة في الجملة التالية:",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub instruction: String,
    pub input: String,
    #[serde(rename = "output")]
    pub response: String,
}

impl InstructionRecord {
    /// The full training prompt, response included.
    pub fn render(&self) -> String {
        format!(
            "{RECORD_PREAMBLE}\n\n{INSTRUCTION_HEADER}\n{}\n\n{INPUT_HEADER}\n{}\n\n{RESPONSE_HEADER}\n{}\n",
            self.instruction, self.input, self.response
        )
    }
}

/// One record per pair, each instruction drawn from `pool` by a generator
/// seeded with `seed` and the pair's index. Returns `None` when the pool is
/// empty.
pub fn build_instruction_records(
    corpus: &[ParallelExample],
    pool: &[String],
    seed: u64,
) -> Option<Vec<InstructionRecord>> {
    if pool.is_empty() {
        return None;
    }
    Some(
        corpus
            .iter()
            .enumerate()
            .map(|(i, pair)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let k = rng.random_range(0..pool.len());
                InstructionRecord {
                    instruction: pool[k].clone(),
                    input: pair.source.to_text(),
                    response: pair.target.to_text(),
                }
            })
            .collect(),
    )
}

/// JSON lines with keys `instruction`, `input`, `output`.
pub fn records_to_jsonl(records: &[InstructionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}
