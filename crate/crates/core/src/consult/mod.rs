//! Model gateway, response contract, the rule-based reference rater, and the
//! visit rating harness.

mod gateway;
mod parse;
mod rater;
mod reference;

pub use gateway::{
    request_consult, ConsultGateway, ConsultRequest, GatewayConfig, HttpGateway, RawModelOutput, ReferenceGateway,
    StubGateway,
};
pub use parse::{parse, parse_verdict, render_contract, ResponseContext, Verdict};
pub use rater::{parse_rating, rate_visit, rate_visit_reference, rater_prompt, RATER_INSTRUCTIONS};
pub use reference::{reference_rate, reference_verdict, Rule, RuledVerdict, REFERENCE_MODEL_ID};
