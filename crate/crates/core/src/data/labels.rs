/// Class names of the five AAMI beat groups, in label-index order.
pub const AAMI_CLASSES: [&str; 5] = ["N", "S", "V", "F", "Q"];

/// PTB-XL diagnostic superclasses, in label-index order.
pub const PTBXL_CLASSES: [&str; 5] = ["NORM", "MI", "STTC", "CD", "HYP"];

/// Maps a beat annotation code onto its AAMI EC57 class index.
///
/// Codes outside the N, S, V and F groups (including unrecognized ones)
/// fall into Q.
pub fn map_beat_label(symbol: char) -> usize {
    match symbol {
        'N' | 'L' | 'R' | 'e' | 'j' => 0,
        'A' | 'a' | 'J' | 'S' => 1,
        'V' | 'E' => 2,
        'F' => 3,
        _ => 4,
    }
}

/// Annotation codes that mark rhythm changes, signal quality or waveform
/// onsets rather than a beat.
pub fn is_non_beat_symbol(symbol: char) -> bool {
    matches!(
        symbol,
        '+' | '~'
            | '|'
            | '"'
            | '['
            | ']'
            | '!'
            | 'x'
            | '('
            | ')'
            | 'p'
            | 't'
            | 'u'
            | '`'
            | '\''
            | '^'
            | 's'
            | 'T'
            | '*'
            | 'D'
            | '='
            | '@'
    )
}

/// Representative annotation code for an AAMI class index.
pub fn aami_symbol(class: usize) -> char {
    ['N', 'A', 'V', 'F', 'Q'].get(class).copied().unwrap_or('Q')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aami_grouping() {
        assert_eq!(map_beat_label('N'), 0);
        assert_eq!(map_beat_label('A'), 1);
        assert_eq!(map_beat_label('E'), 2);
        assert_eq!(map_beat_label('F'), 3);
        assert_eq!(map_beat_label('/'), 4);
        assert_eq!(map_beat_label('?'), 4);
        for c in 0..5 {
            assert_eq!(map_beat_label(aami_symbol(c)), c);
        }
    }
}
