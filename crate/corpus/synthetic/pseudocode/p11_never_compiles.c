__int64 __fastcall sub_11C9(__int64 a1, int a2)
{
  __int64 result; // rax
  int i; // [rsp+18h] [rbp-4h]

  for ( i = 0; i < a2; ++i )
  {
    result = *(unsigned int *)(4LL * i + a1) ^ 0x5A5A5A5Au;
    *(_DWORD *)(4LL * i + a1) = result;
  }
  return result;
}

int __fastcall main(int argc, const char **argv, const char **envp)
{
  int v4; // [rsp+Ch] [rbp-64h] BYREF
  _DWORD v5[24]; // [rsp+10h] [rbp-60h] BYREF

  scanf("%d", &v4);
  v5[0] = v4;
  sub_11C9((__int64)v5, 1);
  printf("%u\n", v5[0]);
  return 0;
}
