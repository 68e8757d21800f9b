import hypothesis.strategies as st

from qcmflow.metadata import ChannelSpec, EcSpec, QcmRecord

u16 = st.integers(0, 0xFFFF)
u32 = st.integers(0, 0xFFFFFFFF)

channel_specs = st.builds(ChannelSpec, u32, u32, u32, st.just(0))
nonzero_ec_specs = st.builds(EcSpec, u16, u16, u16, u16).filter(lambda s: s.has_code())


@st.composite
def records(draw):
    qcom = draw(u16)
    qcom_spec = bytes(16) if qcom == 0 else draw(st.binary(min_size=16, max_size=16))
    qec = draw(u16)
    qec_spec = EcSpec() if qec == 0 else draw(nonzero_ec_specs)
    return QcmRecord(
        qchannel=draw(u16),
        qchannel_spec=draw(channel_specs),
        qcom=qcom,
        qcom_spec=qcom_spec,
        qec=qec,
        qec_spec=qec_spec,
    )
