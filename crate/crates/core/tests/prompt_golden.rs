use opinion_core::prompt::{render_inference, render_training};
use opinion_core::registry::Bias;
use opinion_core::prompt::RenderedPrompt;

const GOLDEN: &[u8] = include_bytes!("fixtures/prompts/askagerman_news_channels.txt");
const INSTRUCTION: &str = "Give two examples of reputable TV news channels";

#[test]
fn inference_prompt_matches_golden_bytes() {
    let prompt = render_inference("AskAGerman", INSTRUCTION).unwrap();
    assert_eq!(prompt.text.as_bytes(), GOLDEN);
    assert_eq!(RenderedPrompt::for_bias(Bias::German, INSTRUCTION).unwrap().text.as_bytes(), GOLDEN);
}

#[test]
fn training_example_round_trips_to_golden() {
    let response = "Tagesschau and ZDF heute.";
    let training = render_training("AskAGerman", INSTRUCTION, response).unwrap();
    let prefix = training.strip_suffix(&format!(" {response}")).unwrap();
    assert_eq!(prefix.as_bytes(), GOLDEN);
}

#[test]
fn rendering_is_pure() {
    for bias in Bias::ALL {
        let a = RenderedPrompt::for_bias(bias, "Why?").unwrap();
        let b = RenderedPrompt::for_bias(bias, "Why?").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.text.matches(bias.serving_subreddit()).count(), 6);
    }
}
