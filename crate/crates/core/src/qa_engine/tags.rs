use std::sync::LazyLock;

use regex::Regex;

static LESSON_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)#lesson(\d+)").unwrap());

/// Strips every `#lessonN` tag from a question and returns the number of the
/// first one. Whitespace left behind is collapsed.
pub fn parse_tags(question: &str) -> (String, Option<u32>) {
    let Some(first) = LESSON_TAG.captures(question) else {
        return (question.to_string(), None);
    };
    let lesson = first[1].parse().ok();
    let stripped = LESSON_TAG.replace_all(question, " ");
    let clean = stripped.split_whitespace().collect::<Vec<_>>().join(" ");
    (clean, lesson)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_tag() {
        assert_eq!(parse_tags("#lesson1 what is setup()?"), ("what is setup()?".into(), Some(1)));
    }

    #[test]
    fn no_tag_leaves_question_untouched() {
        let q = "what is  setup()?";
        assert_eq!(parse_tags(q), (q.to_string(), None));
    }

    #[test]
    fn first_tag_wins_and_all_are_removed() {
        assert_eq!(parse_tags("#lesson2 #lesson3 q"), ("q".into(), Some(2)));
        assert_eq!(parse_tags("why #LESSON12 this"), ("why this".into(), Some(12)));
    }

    #[test]
    fn overflowing_number_is_removed_without_filter() {
        assert_eq!(parse_tags("#lesson99999999999 hi"), ("hi".into(), None));
    }
}
