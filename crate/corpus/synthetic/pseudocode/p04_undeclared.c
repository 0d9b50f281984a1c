__int64 __fastcall count_vowels(const char *a1)
{
  unsigned int v2; // [rsp+14h] [rbp-Ch]
  const char *i; // [rsp+18h] [rbp-8h]

  v2 = 0;
  for ( i = a1; *i; ++i )
  {
    if ( strchr("aeiouAEIOU", *i) )
      ++v2;
  }
  return v2;
}

int __fastcall main(int argc, const char **argv, const char **envp)
{
  char s[104]; // [rsp+0h] [rbp-70h] BYREF

  if ( !fgets(s, 100, stdin) )
    return 1;
  printf("%u\n", (unsigned int)count_vowels(s));
  return 0;
}
