//! Adapter for command-line codecs.
//!
//! Command templates are run through `sh -c` after substituting `{in}`,
//! `{out}` and `{ratio}`. The encoder reads a PGM and writes the bitstream
//! that becomes the packet; the decoder reads that bitstream and writes a PGM.
//! For example, with OpenJPEG:
//!
//! ```text
//! HOLO_EXT_ENCODE='opj_compress -i {in} -o {out} -r {ratio}'
//! HOLO_EXT_DECODE='opj_decompress -i {in} -o {out}'
//! ```

use std::path::Path;
use std::process::Command;

use super::Packet;
use crate::error::{Error, Result};
use crate::image::{read_pgm, write_pgm, Image};

pub const ENV_ENCODE: &str = "HOLO_EXT_ENCODE";
pub const ENV_DECODE: &str = "HOLO_EXT_DECODE";

const INPUT_NAME: &str = "input.pgm";
const STREAM_NAME: &str = "packet.j2k";
const OUTPUT_NAME: &str = "decoded.pgm";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalTool {
    pub encode_cmd: String,
    pub decode_cmd: String,
}

impl ExternalTool {
    pub fn new(encode_cmd: impl Into<String>, decode_cmd: impl Into<String>) -> Self {
        Self { encode_cmd: encode_cmd.into(), decode_cmd: decode_cmd.into() }
    }

    pub fn from_env() -> Result<Self> {
        let get = |key: &str| {
            std::env::var(key).map_err(|_| Error::ExternalCodec {
                message: format!("{key} is not set"),
                diagnostics: String::new(),
            })
        };
        Ok(Self::new(get(ENV_ENCODE)?, get(ENV_DECODE)?))
    }

    pub fn encode(&self, img: &Image, ratio: f64) -> Result<Packet> {
        let dir = tempfile::tempdir()?;
        let input = dir.path().join(INPUT_NAME);
        let stream = dir.path().join(STREAM_NAME);
        std::fs::write(&input, write_pgm(img))?;
        run(&self.encode_cmd, &input, &stream, ratio)?;
        Ok(Packet::new(read_output(&stream)?))
    }

    pub fn decode(&self, pkt: &Packet) -> Result<Image> {
        let dir = tempfile::tempdir()?;
        let stream = dir.path().join(STREAM_NAME);
        let output = dir.path().join(OUTPUT_NAME);
        std::fs::write(&stream, pkt.bytes())?;
        run(&self.decode_cmd, &stream, &output, 0.0)?;
        read_pgm(&read_output(&output)?).map_err(|e| Error::ExternalCodec {
            message: format!("decoder output is not a readable PGM: {e}"),
            diagnostics: String::new(),
        })
    }
}

/// Encodes `img` with the external tool at ratio `p.theta`, then decodes it.
pub fn external_codec_roundtrip(
    img: &Image,
    p: &super::CodecParams,
    encode_cmd: &str,
    decode_cmd: &str,
) -> Result<(Packet, Image)> {
    p.validate()?;
    let tool = ExternalTool::new(encode_cmd, decode_cmd);
    let pkt = tool.encode(img, p.theta)?;
    let decoded = tool.decode(&pkt)?;
    Ok((pkt, decoded))
}

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

fn expand(template: &str, input: &Path, output: &Path, ratio: f64) -> String {
    template
        .replace("{in}", &shell_quote(input))
        .replace("{out}", &shell_quote(output))
        .replace("{ratio}", &ratio.to_string())
}

fn run(template: &str, input: &Path, output: &Path, ratio: f64) -> Result<()> {
    let cmd = expand(template, input, output, ratio);
    let result = Command::new("sh").arg("-c").arg(&cmd).output().map_err(|e| Error::ExternalCodec {
        message: format!("failed to spawn `{cmd}`: {e}"),
        diagnostics: String::new(),
    })?;
    if !result.status.success() {
        let mut diagnostics = String::from_utf8_lossy(&result.stderr).into_owned();
        diagnostics.push_str(&String::from_utf8_lossy(&result.stdout));
        return Err(Error::ExternalCodec { message: format!("`{cmd}` exited with {}", result.status), diagnostics });
    }
    Ok(())
}

fn read_output(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::ExternalCodec {
        message: format!("tool did not produce {}: {e}", path.display()),
        diagnostics: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::CodecParams;

    fn img() -> Image {
        Image::from_fn(5, 7, |r, c| (r * 30 + c * 7) as f64).unwrap()
    }

    #[test]
    fn copy_tool_is_identity() {
        let (pkt, back) = external_codec_roundtrip(&img(), &CodecParams::external(50.0), "cp {in} {out}", "cp {in} {out}")
            .unwrap();
        assert_eq!(back, img());
        assert_eq!(pkt.bytes(), write_pgm(&img()).as_slice());
    }

    #[test]
    fn ratio_placeholder_is_substituted() {
        let enc = "test \"{ratio}\" = 25 && cp {in} {out}";
        assert!(external_codec_roundtrip(&img(), &CodecParams::external(25.0), enc, "cp {in} {out}").is_ok());
        let err = external_codec_roundtrip(&img(), &CodecParams::external(50.0), enc, "cp {in} {out}");
        assert!(matches!(err, Err(Error::ExternalCodec { .. })));
    }

    #[test]
    fn failing_tool_reports_diagnostics() {
        let r = external_codec_roundtrip(&img(), &CodecParams::external(50.0), "echo boom >&2; exit 1", "cp {in} {out}");
        match r {
            Err(Error::ExternalCodec { diagnostics, .. }) => assert!(diagnostics.contains("boom")),
            other => panic!("expected ExternalCodec, got {other:?}"),
        }
    }

    #[test]
    fn missing_output_is_an_error() {
        let r = external_codec_roundtrip(&img(), &CodecParams::external(50.0), "true", "cp {in} {out}");
        assert!(matches!(r, Err(Error::ExternalCodec { .. })));
    }
}
